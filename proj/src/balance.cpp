#include "fprint/balance.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fprint/random.hpp"

namespace fprint {

double euclidean(const FeatureVector& a, const FeatureVector& b) {
    const auto x = a.as_array();
    const auto y = b.as_array();
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

std::size_t medoid_index(std::span<const FeatureVector> members) {
    if (members.empty()) throw Error("medoid of an empty class");
    std::size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < members.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < members.size(); ++j) {
            if (i != j) sum += euclidean(members[i], members[j]);
        }
        if (sum < best_sum) {
            best_sum = sum;
            best = i;
        }
    }
    return best;
}

FeatureVector class_medoid(std::span<const FeatureVector> members) {
    return members[medoid_index(members)];
}

NeighborMatrix build_neighbor_matrix(std::span<const FeatureVector> members, std::size_t medoid,
                                     bool pad_small) {
    constexpr std::size_t kNeighbors = kFeatureCount - 1;
    if (medoid >= members.size()) throw Error("medoid index out of range");
    if (members.size() < kFeatureCount && !pad_small) {
        throw Error("neighbour matrix needs at least 6 class members, got " +
                    std::to_string(members.size()));
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i != medoid) order.push_back(i);
    }
    std::vector<double> dist(members.size());
    for (auto i : order) dist[i] = euclidean(members[i], members[medoid]);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    NeighborMatrix m;
    for (std::size_t r = 0; r < kNeighbors; ++r) {
        if (r < order.size()) {
            m.rows[r] = members[order[r]].as_array();
        } else {
            m.rows[r] = members[medoid].as_array();
            m.padded = true;
        }
    }
    m.rows[kNeighbors] = members[medoid].as_array();
    return m;
}

Mat6 covariance(const NeighborMatrix& m) {
    constexpr std::size_t n = kFeatureCount;
    Vec6 mean{};
    for (const auto& row : m.rows) {
        for (std::size_t j = 0; j < n; ++j) mean[j] += row[j];
    }
    for (auto& v : mean) v /= static_cast<double>(n);
    Mat6 cov{};
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            double s = 0.0;
            for (const auto& row : m.rows) s += (row[a] - mean[a]) * (row[b] - mean[b]);
            cov[a][b] = cov[b][a] = s / static_cast<double>(n - 1);
        }
    }
    return cov;
}

EigenDirection dominant_eigenpair(const Mat6& symmetric) {
    Eigen::Matrix<double, 6, 6> a;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) a(i, j) = symmetric[i][j];
    }
    // Eigenvalues come back in increasing order.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> solver(a);
    if (solver.info() != Eigen::Success) throw Error("eigen decomposition failed");
    const double lambda = solver.eigenvalues()(5);
    if (!(lambda > 0.0)) throw DegenerateClass("neighbourhood has zero spread");

    EigenDirection out;
    out.magnitude = lambda;
    Eigen::Matrix<double, 6, 1> v = solver.eigenvectors().col(5).normalized();
    const double scale = v.cwiseAbs().maxCoeff();
    for (int i = 0; i < 6; ++i) {
        if (std::abs(v(i)) > 1e-12 * scale) {
            if (v(i) < 0) v = -v;
            break;
        }
    }
    for (int i = 0; i < 6; ++i) out.direction[i] = v(i);
    return out;
}

EigenDirection dominant_eigendirection(const NeighborMatrix& m) {
    const auto& first = m.rows.front();
    const bool identical = std::all_of(m.rows.begin(), m.rows.end(),
                                       [&](const Vec6& row) { return row == first; });
    if (identical) throw DegenerateClass("all neighbourhood rows are identical");
    return dominant_eigenpair(covariance(m));
}

FeatureVector generate_candidate(const NeighborMatrix& m, const EigenDirection& e, double step) {
    const Vec6& medoid = m.rows.back();
    Vec6 out{};
    const double reach = step * std::sqrt(e.magnitude);
    for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = medoid[i] + reach * e.direction[i];
    auto fv = FeatureVector::from_array(out);
    fv.mu = std::max(fv.mu, 0.0);
    fv.sigma2 = std::max(fv.sigma2, 0.0);
    fv.ssrvr = std::max(fv.ssrvr, 0.0);
    fv.bdd_avg = std::max(fv.bdd_avg, 0.0);
    fv.rvr_avg = std::max(fv.rvr_avg, 0.0);
    // Keep the angle strictly inside the open arctan range.
    const double limit = std::nextafter(std::numbers::pi / 2, 0.0);
    fv.theta_avg = std::clamp(fv.theta_avg, -limit, limit);
    return fv;
}

FeatureVector generate_candidate(const NeighborMatrix& m, double step) {
    return generate_candidate(m, dominant_eigendirection(m), step);
}

// ---------------------------------------------------------------------------

Binning Binning::fit(std::span<const FeatureVector> reference) {
    if (reference.empty()) throw Error("cannot bin an empty reference set");
    Binning b;
    b.lo = reference.front().as_array();
    b.hi = b.lo;
    for (const auto& f : reference) {
        const auto a = f.as_array();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            b.lo[i] = std::min(b.lo[i], a[i]);
            b.hi[i] = std::max(b.hi[i], a[i]);
        }
    }
    return b;
}

int Binning::bin(std::size_t feature, double value) const {
    const double span = hi[feature] - lo[feature];
    if (!(span > 0.0)) return 0;
    const double t = (value - lo[feature]) / span;
    return std::clamp(static_cast<int>(std::floor(t * kBins)), 0, kBins - 1);
}

Distribution distribution_from_counts(std::span<const double> counts, const Binning& binning) {
    constexpr std::size_t bins = Binning::kBins;
    if (counts.size() != kFeatureCount * bins) throw Error("histogram has the wrong number of bins");
    Distribution d{binning, std::vector<double>(counts.begin(), counts.end())};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double total = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            d.mass[f * bins + b] += kKlSmoothing;
            total += d.mass[f * bins + b];
        }
        for (std::size_t b = 0; b < bins; ++b) d.mass[f * bins + b] /= total;
    }
    return d;
}

Distribution make_distribution(std::span<const FeatureVector> samples, const Binning& binning) {
    constexpr std::size_t bins = Binning::kBins;
    std::vector<double> counts(kFeatureCount * bins, 0.0);
    for (const auto& s : samples) {
        const auto a = s.as_array();
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            counts[f * bins + static_cast<std::size_t>(binning.bin(f, a[f]))] += 1.0;
        }
    }
    return distribution_from_counts(counts, binning);
}

double kl_divergence(const Distribution& p, const Distribution& q) {
    if (!(p.binning == q.binning) || p.mass.size() != q.mass.size()) {
        throw Error("kl_divergence: distributions use different binnings");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        kl += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
    }
    return kl;
}

Label max_divergence_class(const Dataset& d) {
    const auto all = d.features();
    const auto binning = Binning::fit(all);
    const auto whole = make_distribution(all, binning);
    std::optional<Label> best;
    double best_kl = -std::numeric_limits<double>::infinity();
    for (auto l : d.classes()) {
        const auto members = d.features_of(l);
        const double kl = kl_divergence(make_distribution(members, binning), whole);
        if (kl > best_kl) {
            best_kl = kl;
            best = l;
        }
    }
    if (!best) throw Error("max_divergence_class of an empty dataset");
    return *best;
}

std::string_view to_string(GuardReason r) {
    switch (r) {
        case GuardReason::none: return "";
        case GuardReason::argmax_shift: return "argmax-shift";
        case GuardReason::duplicate: return "duplicate";
    }
    return "?";
}

GuardDecision kl_guard(const LabeledSample& candidate, Label kappa, const Dataset& balanced) {
    for (const auto& s : balanced.samples()) {
        if (s.features == candidate.features) return {false, GuardReason::duplicate};
    }
    Dataset extended = balanced;
    extended.add(candidate);
    if (max_divergence_class(extended) != kappa) return {false, GuardReason::argmax_shift};
    return {true, GuardReason::none};
}

GuardDecision kl_guard(const LabeledSample& candidate, const Dataset& original, const Dataset& balanced) {
    return kl_guard(candidate, max_divergence_class(original), balanced);
}

// ---------------------------------------------------------------------------

Vec6 feature_scales(const Dataset& d) {
    Vec6 scales;
    scales.fill(1.0);
    if (d.size() < 2) return scales;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double mean = 0.0;
        for (const auto& s : d.samples()) mean += s.features[f];
        mean /= static_cast<double>(d.size());
        double var = 0.0;
        for (const auto& s : d.samples()) var += (s.features[f] - mean) * (s.features[f] - mean);
        const double sd = std::sqrt(var / static_cast<double>(d.size() - 1));
        if (sd > 0.0 && std::isfinite(sd)) scales[f] = sd;
    }
    return scales;
}

namespace {

FeatureVector divide(const FeatureVector& x, const Vec6& scales) {
    auto a = x.as_array();
    for (std::size_t f = 0; f < kFeatureCount; ++f) a[f] /= scales[f];
    return FeatureVector::from_array(a);
}

// Same displacement sqrt(magnitude) * direction, expressed in raw units.
EigenDirection to_raw_units(const EigenDirection& e, const Vec6& scales) {
    Vec6 v{};
    double norm2 = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        v[f] = e.direction[f] * scales[f];
        norm2 += v[f] * v[f];
    }
    const double norm = std::sqrt(norm2);
    EigenDirection raw;
    for (std::size_t f = 0; f < kFeatureCount; ++f) raw.direction[f] = v[f] / norm;
    raw.magnitude = e.magnitude * norm2;
    return raw;
}

}  // namespace

Dataset balance_dataset(const Dataset& d, std::uint64_t seed, const BalanceParams& params,
                        BalanceReport* report) {
    const auto classes = d.classes();
    if (classes.size() < 2) throw Error("balancing needs at least two non-empty classes");

    BalanceReport local;
    BalanceReport& rep = report ? *report : local;
    rep = {};
    rep.kappa = max_divergence_class(d);

    Dataset out = d;
    std::size_t target = 0;
    for (auto l : classes) target = std::max(target, d.count(l));

    // Neighbourhoods and eigen-directions are computed on features divided
    // by their spread so that no single feature's units dominate.
    const Vec6 scales = feature_scales(d);
    Rng rng(seed);
    std::vector<bool> exhausted(kLabelCount, false);
    std::size_t attempt_no = 0;
    std::size_t synthetic_no = 0;

    auto pending = [&] {
        return std::any_of(classes.begin(), classes.end(), [&](Label l) {
            return out.count(l) < target && !exhausted[label_index(l)];
        });
    };

    // One synthetic sample per deficient class per round, in class order.
    while (pending()) {
        for (auto l : classes) {
            if (out.count(l) >= target || exhausted[label_index(l)]) continue;

            auto members = out.features_of(l);
            std::vector<FeatureVector> scaled;
            scaled.reserve(members.size());
            for (const auto& x : members) scaled.push_back(divide(x, scales));
            auto medoid = medoid_index(scaled);
            if (params.observed_neighbors) {
                // Originals come first; keep them plus the (possibly synthetic) medoid.
                const std::size_t observed = d.count(l);
                if (medoid >= observed) {
                    members[observed] = members[medoid];
                    scaled[observed] = scaled[medoid];
                    medoid = observed;
                }
                const std::size_t keep = std::max(observed, medoid + 1);
                members.resize(keep);
                scaled.resize(keep);
            }
            const auto m = build_neighbor_matrix(members, medoid, true);
            const auto ms = build_neighbor_matrix(scaled, medoid, true);
            if (m.padded &&
                std::find(rep.padded_classes.begin(), rep.padded_classes.end(), l) == rep.padded_classes.end()) {
                rep.padded_classes.push_back(l);
                rep.warnings.push_back(std::string("class ") + std::string(to_string(l)) +
                                       " has fewer than 6 members; neighbourhood padded with the medoid");
            }
            EigenDirection e;
            try {
                e = to_raw_units(dominant_eigendirection(ms), scales);
            } catch (const DegenerateClass&) {
                exhausted[label_index(l)] = true;
                rep.exhausted_classes.push_back(l);
                rep.warnings.push_back(std::string("class ") + std::string(to_string(l)) +
                                       " is degenerate; balancing stopped for it");
                continue;
            }

            double step = params.step;
            bool accepted = false;
            for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
                LabeledSample cand{generate_candidate(m, e, step), l,
                                   "synthetic-" + std::to_string(synthetic_no)};
                const auto decision = kl_guard(cand, rep.kappa, out);
                rep.log.push_back({attempt_no++, l, step, decision.accepted, decision.reason});
                if (decision.accepted) {
                    out.add(std::move(cand));
                    ++synthetic_no;
                    accepted = true;
                    break;
                }
                step = params.step * rng.uniform(params.jitter_lo, params.jitter_hi);
            }
            if (!accepted) {
                exhausted[label_index(l)] = true;
                rep.exhausted_classes.push_back(l);
                rep.warnings.push_back(std::string("class ") + std::string(to_string(l)) +
                                       " exhausted its attempts; partial balance");
            }
        }
    }
    return out;
}

std::string format_balance_log(const BalanceReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "attempt,class,step,decision,reason\n";
    for (const auto& e : report.log) {
        os << e.attempt << ',' << to_string(e.label) << ',' << e.step << ','
           << (e.accepted ? "accept" : "reject") << ',' << to_string(e.reason) << '\n';
    }
    return os.str();
}

Dataset smote_baseline(const Dataset& d, int k, std::uint64_t seed) {
    const auto classes = d.classes();
    if (classes.size() < 2) throw Error("SMOTE needs at least two non-empty classes");
    if (k < 1) throw Error("SMOTE needs k >= 1");
    std::size_t target = 0;
    for (auto l : classes) target = std::max(target, d.count(l));

    Rng rng(seed);
    Dataset out = d;
    std::size_t synthetic_no = 0;
    for (auto l : classes) {
        if (d.count(l) >= target) continue;
        const auto members = d.features_of(l);
        if (members.size() < static_cast<std::size_t>(k) + 1) {
            throw Error("SMOTE: class " + std::string(to_string(l)) + " has " +
                        std::to_string(members.size()) + " members, needs k+1 = " + std::to_string(k + 1));
        }
        std::vector<std::vector<std::size_t>> neighbours(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            std::vector<std::size_t> idx;
            for (std::size_t j = 0; j < members.size(); ++j) {
                if (j != i) idx.push_back(j);
            }
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return euclidean(members[i], members[a]) < euclidean(members[i], members[b]);
            });
            idx.resize(static_cast<std::size_t>(k));
            neighbours[i] = std::move(idx);
        }
        for (std::size_t n = d.count(l); n < target; ++n) {
            const std::size_t i = rng.index(members.size());
            const std::size_t j = neighbours[i][rng.index(neighbours[i].size())];
            const double gap = rng.uniform();
            const auto x = members[i].as_array();
            const auto y = members[j].as_array();
            Vec6 z{};
            for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = x[f] + gap * (y[f] - x[f]);
            out.add({FeatureVector::from_array(z), l, "smote-" + std::to_string(synthetic_no++)});
        }
    }
    return out;
}

}  // namespace fprint
