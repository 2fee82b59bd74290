#include "fprint/ucflem.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fprint/error.hpp"
#include "fprint/random.hpp"

namespace fprint {

std::string_view to_string(Learner l) { return l == Learner::psi1 ? "random_forest" : "gradient_boost"; }

LayerModels assign_layer_models(double a1, double a2) {
    LayerModels m;
    m.layer1 = a1 > a2 ? Learner::psi1 : Learner::psi2;
    m.layer2 = a1 < a2 ? Learner::psi1 : Learner::psi2;
    return m;
}

Agreement split_agreement(std::span<const std::size_t> ids, std::span<const Label> l1, std::span<const Label> l2) {
    if (ids.size() != l1.size() || ids.size() != l2.size()) {
        throw Error("split_agreement: label lists cover different sample sets");
    }
    Agreement a;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (l1[i] == l2[i]) {
            a.rho.push_back({ids[i], l1[i]});
        } else {
            a.tau.push_back(ids[i]);
        }
    }
    return a;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const Dataset& d, double train_fraction,
                                                                               std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
    Rng rng(seed);
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (auto l : kAllLabels) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i].label == l) members.push_back(i);
        }
        if (members.empty()) continue;
        rng.shuffle(members);
        auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size());
        train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

PhaseResult run_phase(const Dataset& train, std::span<const FeatureVector> test,
                      std::span<const std::size_t> test_ids, const UcflemConfig& cfg, std::uint64_t phase_seed) {
    PhaseResult out;
    const Dataset working =
        cfg.balance ? balance_dataset(train, Rng::derive(phase_seed, 1), cfg.balancing, &out.balance_report) : train;
    out.train_size = working.size();
    out.train_counts = working.counts();

    auto [fit_idx, val_idx] = stratified_split(working, 1.0 - cfg.validation_fraction, Rng::derive(phase_seed, 2));
    const Dataset fit = working.subset(fit_idx);
    const Dataset validation = val_idx.empty() ? fit : working.subset(val_idx);

    out.psi1 = train_random_forest(fit, Rng::derive(phase_seed, 3), cfg.forest);
    out.psi2 = train_gradient_boost(fit, Rng::derive(phase_seed, 4), cfg.boost);
    out.accuracy_psi1 = out.psi1.validation_accuracy = evaluate(out.psi1, validation).accuracy;
    out.accuracy_psi2 = out.psi2.validation_accuracy = evaluate(out.psi2, validation).accuracy;
    out.layers = assign_layer_models(out.accuracy_psi1, out.accuracy_psi2);
    // The accuracies only rank the learners; the deployed models see the
    // whole training set.
    out.psi1 = train_random_forest(working, Rng::derive(phase_seed, 3), cfg.forest);
    out.psi2 = train_gradient_boost(working, Rng::derive(phase_seed, 4), cfg.boost);
    out.psi1.validation_accuracy = out.accuracy_psi1;
    out.psi2.validation_accuracy = out.accuracy_psi2;

    const auto& layer1 = out.layers.layer1 == Learner::psi1 ? out.psi1 : out.psi2;
    const auto& layer2 = out.layers.layer2 == Learner::psi1 ? out.psi1 : out.psi2;

    std::vector<FeatureVector> xs;
    xs.reserve(test_ids.size());
    for (auto id : test_ids) xs.push_back(test[id]);
    const auto l1 = predict(layer1, xs);

    // Layer 2 receives the layer-1 output as three label-keyed fragments.
    std::vector<Label> l2(xs.size());
    for (auto fragment_label : kAllLabels) {
        std::vector<std::size_t> where;
        std::vector<FeatureVector> fragment;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (l1[i] == fragment_label) {
                where.push_back(i);
                fragment.push_back(xs[i]);
            }
        }
        const auto pred = predict(layer2, fragment);
        for (std::size_t j = 0; j < where.size(); ++j) l2[where[j]] = pred[j];
    }

    auto agreement = split_agreement(test_ids, l1, l2);
    out.rho = std::move(agreement.rho);
    out.tau = std::move(agreement.tau);
    return out;
}

AccuracyTable layer_accuracies(std::initializer_list<const PhaseResult*> phases) {
    AccuracyTable t;
    for (const auto* p : phases) {
        for (auto served : {p->layers.layer1, p->layers.layer2}) {
            if (served == Learner::psi1) {
                t.psi1.push_back(p->accuracy_psi1);
            } else {
                t.psi2.push_back(p->accuracy_psi2);
            }
        }
    }
    return t;
}

Learner best_learner(const AccuracyTable& table) {
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    return mean(table.psi1) > mean(table.psi2) ? Learner::psi1 : Learner::psi2;
}

Defuzzified defuzzify(std::size_t total, std::span<const Resolved> rho1, std::span<const Resolved> rho2,
                      std::span<const std::size_t> unresolved, const AccuracyTable& table,
                      const std::function<Label(Learner, std::size_t)>& fallback) {
    std::vector<int> seen(total, 0);
    Defuzzified out;
    out.labels.assign(total, Label::standard);
    auto mark = [&](std::size_t id) {
        if (id >= total || seen[id]++) throw Error("defuzzify: inputs do not partition the test set");
    };
    for (const auto& r : rho1) {
        mark(r.sample);
        out.labels[r.sample] = r.label;
    }
    for (const auto& r : rho2) {
        mark(r.sample);
        out.labels[r.sample] = r.label;
    }
    out.fallback = best_learner(table);
    for (auto id : unresolved) {
        mark(id);
        out.labels[id] = fallback(out.fallback, id);
        out.fallback_samples.push_back(id);
    }
    if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) {
        throw Error("defuzzify: inputs do not cover the test set");
    }
    return out;
}

UcflemResult classify_dataset(const Dataset& d, const UcflemConfig& cfg) {
    if (d.classes().size() < 2) throw Error("classification needs at least two labeled classes");
    UcflemResult r;
    auto [train_idx, test_idx] = stratified_split(d, cfg.train_fraction, Rng::derive(cfg.seed, 0));
    const Dataset train = d.subset(train_idx);
    const Dataset test = d.subset(test_idx);
    r.test_indices = test_idx;
    r.truth = test.labels();
    const auto xs = test.features();

    std::vector<std::size_t> all(xs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    r.phase1 = run_phase(train, xs, all, cfg, Rng::derive(cfg.seed, 100));
    // Phase 2 retrains on the same training data with its own seed and only
    // sees the samples phase 1 could not settle.
    r.phase2 = run_phase(train, xs, r.phase1.tau, cfg, Rng::derive(cfg.seed, 200));

    const AccuracyTable table = layer_accuracies({&r.phase1, &r.phase2});
    const auto fz = defuzzify(xs.size(), r.phase1.rho, r.phase2.rho, r.phase2.tau, table,
                              [&](Learner which, std::size_t id) {
                                  return predict(which == Learner::psi1 ? r.phase2.psi1 : r.phase2.psi2, xs[id]);
                              });
    r.predicted = fz.labels;
    r.fallback = fz.fallback;
    r.fallback_count = fz.fallback_samples.size();
    r.metrics = compute_metrics(r.truth, r.predicted);
    return r;
}

namespace {

nlohmann::json phase_json(const PhaseResult& p) {
    nlohmann::json counts;
    for (auto l : kAllLabels) counts[std::string(to_string(l))] = p.train_counts[label_index(l)];
    return {{"rho", p.rho.size()},
            {"tau", p.tau.size()},
            {"accuracy_random_forest", p.accuracy_psi1},
            {"accuracy_gradient_boost", p.accuracy_psi2},
            {"layer1", std::string(to_string(p.layers.layer1))},
            {"layer2", std::string(to_string(p.layers.layer2))},
            {"train_size", p.train_size},
            {"train_counts", counts}};
}

}  // namespace

std::string report_json(const UcflemResult& r, const UcflemConfig& cfg) {
    nlohmann::json j;
    j["accuracy"] = r.metrics.accuracy;
    j["precision"] = r.metrics.precision;
    j["recall"] = r.metrics.recall;
    j["f1"] = r.metrics.f1;
    j["test_size"] = r.truth.size();
    j["phase1"] = phase_json(r.phase1);
    j["phase2"] = phase_json(r.phase2);
    j["fallback_model"] = std::string(to_string(r.fallback));
    j["fallback_count"] = r.fallback_count;
    j["seeds"] = {{"seed", cfg.seed}};
    j["balance"] = cfg.balance;
    nlohmann::json classes = nlohmann::json::array();
    for (auto l : r.metrics.classes) classes.push_back(std::string(to_string(l)));
    j["classes"] = classes;
    j["confusion"] = r.metrics.confusion;
    return j.dump(2) + "\n";
}

std::string report_text(const UcflemResult& r, const UcflemConfig& cfg) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "UC-FLEM classification report\n";
    os << "seed " << cfg.seed << ", balancing " << (cfg.balance ? "on" : "off") << ", test samples "
       << r.truth.size() << "\n\n";
    os << "accuracy   " << r.metrics.accuracy << "\n";
    os << "precision  " << r.metrics.precision << "\n";
    os << "recall     " << r.metrics.recall << "\n";
    os << "f1         " << r.metrics.f1 << "\n\n";
    for (int ph = 1; ph <= 2; ++ph) {
        const auto& p = ph == 1 ? r.phase1 : r.phase2;
        os << "phase " << ph << ": rho " << p.rho.size() << ", tau " << p.tau.size() << ", A1 "
           << p.accuracy_psi1 << ", A2 " << p.accuracy_psi2 << ", layer1 " << to_string(p.layers.layer1)
           << ", layer2 " << to_string(p.layers.layer2) << "\n";
    }
    os << "fallback " << to_string(r.fallback) << " labeled " << r.fallback_count << " samples\n\n";
    os << "confusion (rows truth, cols predicted):\n" << std::setw(12) << "";
    for (auto l : r.metrics.classes) os << std::setw(10) << to_string(l);
    os << '\n';
    for (std::size_t i = 0; i < r.metrics.classes.size(); ++i) {
        os << "  " << std::left << std::setw(10) << to_string(r.metrics.classes[i]) << std::right;
        for (auto c : r.metrics.confusion[i]) os << std::setw(10) << c;
        os << '\n';
    }
    return os.str();
}

}  // namespace fprint
