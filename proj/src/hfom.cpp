#include "fprint/hfom.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "fprint/error.hpp"
#include "fprint/random.hpp"

namespace fprint {

std::vector<PoolEntry> select_best_standard(std::span<const PoolEntry> pool, int n) {
    if (n < 4) throw Error("HFOM selection needs n >= 4, got " + std::to_string(n));
    std::vector<PoolEntry> standard;
    for (const auto& e : pool) {
        if (e.label == Label::standard) standard.push_back(e);
    }
    if (standard.size() < static_cast<std::size_t>(n)) {
        throw Error("insufficient standard fingerprints: need " + std::to_string(n) + ", found " +
                    std::to_string(standard.size()));
    }
    std::stable_sort(standard.begin(), standard.end(), [](const PoolEntry& a, const PoolEntry& b) {
        const auto& x = a.features;
        const auto& y = b.features;
        if (x.mu != y.mu) return x.mu < y.mu;
        if (x.sigma2 != y.sigma2) return x.sigma2 < y.sigma2;
        return x.rvr_avg < y.rvr_avg;
    });
    standard.resize(static_cast<std::size_t>(n));
    return standard;
}

// ---------------------------------------------------------------------------

namespace {

void require_same_shape(std::span<const GrayImage> images) {
    for (const auto& img : images) {
        if (img.width() != images[0].width() || img.height() != images[0].height()) {
            throw Error("stack images differ in size");
        }
    }
}

// Agreement with image 0 over rows [r0, r1) x cols [c0, c1).
std::size_t region_agreement(std::span<const GrayImage> images, int r0, int r1, int c0, int c1) {
    std::size_t count = 0;
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            const auto ref = images[0].at(r, c);
            bool all = true;
            for (std::size_t i = 1; i < images.size() && all; ++i) all = images[i].at(r, c) == ref;
            count += all ? 1 : 0;
        }
    }
    return count;
}

}  // namespace

std::size_t common_pixel_count(std::span<const GrayImage> images) {
    if (images.empty()) throw Error("common pixel count of an empty stack");
    require_same_shape(images);
    return region_agreement(images, 0, images[0].height(), 0, images[0].width());
}

FingerStack make_stack(std::vector<GrayImage> images) {
    FingerStack s;
    s.rotations.assign(images.size(), Rotation::r0);
    s.images = std::move(images);
    s.common_count = common_pixel_count(s.images);
    return s;
}

FingerStack min_rotate_max_flow(FingerStack stack) {
    if (stack.images.empty()) throw Error("empty stack");
    require_same_shape(stack.images);
    for (const auto& img : stack.images) {
        if (!img.square()) throw Error("stack images must be square");
        if (!img.is_binary()) throw Error("min-rotate max-flow needs binarized images");
    }
    if (stack.rotations.size() != stack.images.size()) stack.rotations.assign(stack.images.size(), Rotation::r0);
    stack.common_count = common_pixel_count(stack.images);

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 1; i < stack.images.size(); ++i) {
            const GrayImage current = stack.images[i];
            std::size_t best_count = stack.common_count;
            std::optional<Rotation> best_turn;
            std::optional<GrayImage> best_image;
            for (auto turn : {Rotation::r90, Rotation::r180, Rotation::r270}) {
                stack.images[i] = rotate_quarter(current, turn);
                const auto count = common_pixel_count(stack.images);
                if (count > best_count) {
                    best_count = count;
                    best_turn = turn;
                    best_image = stack.images[i];
                }
            }
            if (best_turn) {
                stack.images[i] = std::move(*best_image);
                stack.rotations[i] = compose(stack.rotations[i], *best_turn);
                stack.common_count = best_count;
                changed = true;
            } else {
                stack.images[i] = current;
            }
        }
    }
    return stack;
}

// ---------------------------------------------------------------------------

BlockGrid split_blocks(const GrayImage& img, int block_side) {
    BlockGrid g;
    g.padded = pad_to_blocks(img, block_side, &g.padding);
    g.block_side = block_side;
    g.rows = g.padded.height() / block_side;
    g.cols = g.padded.width() / block_side;
    return g;
}

std::array<GrayImage, 4> sub_blocks(const GrayImage& block) {
    const int b = block.width();
    if (!block.square() || b % 2 == 0) throw Error("sub_blocks needs a square block with odd side");
    const int h = (b + 1) / 2;
    return {block.region(0, 0, h, h), block.region(0, h - 1, h, h), block.region(h - 1, 0, h, h),
            block.region(h - 1, h - 1, h, h)};
}

MaybeAngle subblock_orientation(const GrayImage& sub, int eta) {
    if (eta < 0 || eta > 3) throw Error("sub-block index must be 0..3");
    if (!sub.square()) throw Error("sub-block must be square");
    if (!sub.is_binary()) throw Error("sub-block orientation needs a binarized block");
    // Turn that brings the shared center pixel to the bottom-left corner.
    static constexpr std::array<Rotation, 4> kToCanonical{Rotation::r270, Rotation::r0, Rotation::r180, Rotation::r90};
    const Rotation alpha = kToCanonical[static_cast<std::size_t>(eta)];
    const GrayImage q = rotate_quarter(sub, alpha);
    const int h = q.width();

    int row = 0;
    int diag = 0;
    int col = 0;
    for (int t = 0; t < h; ++t) {
        row += q.at(h - 1, t) == 0;
        diag += q.at(h - 1 - t, t) == 0;
        col += q.at(t, 0) == 0;
    }
    // Candidates in ascending canonical angle; strict > keeps the smaller on ties.
    LineAngle best = LineAngle::deg0;
    int best_count = row;
    if (diag > best_count) {
        best = LineAngle::deg45;
        best_count = diag;
    }
    if (col > best_count) {
        best = LineAngle::deg90;
        best_count = col;
    }
    if (best_count < 2) return std::nullopt;
    // Undo alpha: odd quarter turns exchange rows and columns. The diagonal
    // label stands for whichever diagonal passes through the center.
    const bool odd = alpha == Rotation::r90 || alpha == Rotation::r270;
    if (odd && best == LineAngle::deg0) return LineAngle::deg90;
    if (odd && best == LineAngle::deg90) return LineAngle::deg0;
    return best;
}

MaybeAngle vote(std::span<const MaybeAngle> votes) {
    std::array<int, 3> tally{};
    for (const auto& v : votes) {
        if (v) ++tally[static_cast<std::size_t>(static_cast<int>(*v) / 45)];
    }
    const auto it = std::max_element(tally.begin(), tally.end());
    if (*it == 0) return std::nullopt;
    return static_cast<LineAngle>(45 * static_cast<int>(it - tally.begin()));
}

GrayImage render_line(int block_side, MaybeAngle angle) {
    GrayImage out(block_side, block_side, 255);
    if (!angle) return out;
    const int c = block_side / 2;
    for (int t = 0; t < block_side; ++t) {
        switch (*angle) {
            case LineAngle::deg0: out.at(c, t) = 0; break;
            case LineAngle::deg90: out.at(t, c) = 0; break;
            case LineAngle::deg45: out.at(block_side - 1 - t, t) = 0; break;
        }
    }
    return out;
}

BlockOrientation block_orientation_field(const GrayImage& block) {
    const auto subs = sub_blocks(block);
    std::array<MaybeAngle, 4> votes;
    for (int eta = 0; eta < 4; ++eta) votes[static_cast<std::size_t>(eta)] = subblock_orientation(subs[static_cast<std::size_t>(eta)], eta);
    const auto chosen = vote(votes);
    return {render_line(block.width(), chosen), chosen};
}

OrientationMap orientation_map(const GrayImage& padded, int block_side) {
    if (block_side <= 0 || block_side % 2 == 0) throw Error("block side must be odd");
    if (padded.width() % block_side != 0 || padded.height() % block_side != 0) {
        throw Error("orientation_map input is not padded to the block grid");
    }
    if (!padded.is_binary()) throw Error("orientation_map needs a binarized image");
    OrientationMap m;
    m.block_side = block_side;
    m.rows = padded.height() / block_side;
    m.cols = padded.width() / block_side;
    m.image = GrayImage(padded.width(), padded.height(), 255);
    m.angles.resize(static_cast<std::size_t>(m.rows) * m.cols);
    m.block_rotations.assign(m.angles.size(), Rotation::r0);
    for (int k = 0; k < m.rows; ++k) {
        for (int l = 0; l < m.cols; ++l) {
            const auto field =
                block_orientation_field(padded.region(k * block_side, l * block_side, block_side, block_side));
            m.image.paste(field.rendering, k * block_side, l * block_side);
            m.angles[static_cast<std::size_t>(k) * m.cols + l] = field.angle;
        }
    }
    return m;
}

std::size_t common_pixel_count(std::span<const OrientationMap> maps) {
    std::vector<GrayImage> images;
    images.reserve(maps.size());
    for (const auto& m : maps) images.push_back(m.image);
    return common_pixel_count(images);
}

std::vector<OrientationMap> refine_blocks(std::vector<OrientationMap> maps) {
    if (maps.empty()) return maps;
    for (const auto& m : maps) {
        if (m.block_side != maps[0].block_side || m.rows != maps[0].rows || m.cols != maps[0].cols) {
            throw Error("refine_blocks: maps use different block grids");
        }
    }
    const int b = maps[0].block_side;
    std::vector<GrayImage> images;
    for (auto& m : maps) images.push_back(std::move(m.image));

    bool changed = true;
    while (changed) {
        changed = false;
        for (int k = 0; k < maps[0].rows; ++k) {
            for (int l = 0; l < maps[0].cols; ++l) {
                const int r0 = k * b;
                const int c0 = l * b;
                // Only this block's pixels can change, so the stack-wide
                // gain equals the gain inside the block.
                for (std::size_t i = 1; i < images.size(); ++i) {
                    const GrayImage current = images[i].region(r0, c0, b, b);
                    std::size_t best_count = region_agreement(images, r0, r0 + b, c0, c0 + b);
                    std::optional<Rotation> best_turn;
                    for (auto turn : {Rotation::r90, Rotation::r180, Rotation::r270}) {
                        images[i].paste(rotate_quarter(current, turn), r0, c0);
                        const auto count = region_agreement(images, r0, r0 + b, c0, c0 + b);
                        if (count > best_count) {
                            best_count = count;
                            best_turn = turn;
                        }
                    }
                    if (best_turn) {
                        images[i].paste(rotate_quarter(current, *best_turn), r0, c0);
                        const auto idx = static_cast<std::size_t>(k) * maps[i].cols + l;
                        maps[i].block_rotations[idx] = compose(maps[i].block_rotations[idx], *best_turn);
                        auto& a = maps[i].angles[idx];
                        if (a && (*best_turn == Rotation::r90 || *best_turn == Rotation::r270)) {
                            if (*a == LineAngle::deg0) {
                                a = LineAngle::deg90;
                            } else if (*a == LineAngle::deg90) {
                                a = LineAngle::deg0;
                            }
                        }
                        changed = true;
                    } else {
                        images[i].paste(current, r0, c0);
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < maps.size(); ++i) maps[i].image = std::move(images[i]);
    return maps;
}

// ---------------------------------------------------------------------------

GrayImage even_sided(const GrayImage& img) {
    if (img.width() % 2 == 0 && img.height() % 2 == 0) return img;
    GrayImage out(img.width() + img.width() % 2, img.height() + img.height() % 2, 255);
    out.paste(img, 0, 0);
    return out;
}

GrayImage quadrant(const GrayImage& img, int q) {
    if (img.width() % 2 || img.height() % 2) throw Error("quadrant split needs even sides");
    if (q < 0 || q > 3) throw Error("quadrant index must be 0..3");
    const int hh = img.height() / 2;
    const int hw = img.width() / 2;
    return img.region(q / 2 * hh, q % 2 * hw, hh, hw);
}

Hfom assemble_hfom(std::span<const OrientationMap> maps, std::optional<std::uint64_t> assignment_seed) {
    if (maps.size() < 4) throw Error("HFOM assembly needs at least 4 orientation maps");
    for (const auto& m : maps) {
        if (m.image.width() != maps[0].image.width() || m.image.height() != maps[0].image.height()) {
            throw Error("HFOM assembly: orientation maps differ in size");
        }
    }
    std::vector<int> sources{0, 1, 2, 3};
    if (assignment_seed) {
        Rng rng(*assignment_seed);
        rng.shuffle(sources);
    }
    const GrayImage first = even_sided(maps[0].image);
    Hfom h;
    h.image = GrayImage(first.width(), first.height(), 255);
    const int hh = first.height() / 2;
    const int hw = first.width() / 2;
    for (int q = 0; q < 4; ++q) {
        const int z = sources[static_cast<std::size_t>(q)];
        h.image.paste(quadrant(even_sided(maps[static_cast<std::size_t>(z)].image), q), q / 2 * hh, q % 2 * hw);
        h.provenance[static_cast<std::size_t>(q)] = {q + 1, z};
    }
    return h;
}

// ---------------------------------------------------------------------------

double ssim(const GrayImage& a, const GrayImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw Error("ssim: image dimensions differ");
    constexpr int kWin = 7;
    if (a.width() < kWin || a.height() < kWin) throw Error("ssim needs images of at least 7x7");
    constexpr double kN = kWin * kWin;
    constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
    constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

    // Integral images; int64 keeps every window sum exact.
    const int w = a.width();
    const int h = a.height();
    const auto stride = static_cast<std::size_t>(w + 1);
    std::vector<std::int64_t> sa((h + 1) * stride), sb(sa.size()), saa(sa.size()), sbb(sa.size()), sab(sa.size());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::int64_t x = a.at(r, c);
            const std::int64_t y = b.at(r, c);
            const auto i = (r + 1) * stride + (c + 1);
            const auto up = r * stride + (c + 1);
            const auto left = (r + 1) * stride + c;
            const auto diag = r * stride + c;
            sa[i] = x + sa[up] + sa[left] - sa[diag];
            sb[i] = y + sb[up] + sb[left] - sb[diag];
            saa[i] = x * x + saa[up] + saa[left] - saa[diag];
            sbb[i] = y * y + sbb[up] + sbb[left] - sbb[diag];
            sab[i] = x * y + sab[up] + sab[left] - sab[diag];
        }
    }
    auto window = [&](const std::vector<std::int64_t>& s, int r, int c) {
        return s[(r + kWin) * stride + (c + kWin)] - s[r * stride + (c + kWin)] - s[(r + kWin) * stride + c] +
               s[r * stride + c];
    };

    double total = 0.0;
    std::size_t windows = 0;
    for (int r = 0; r + kWin <= h; ++r) {
        for (int c = 0; c + kWin <= w; ++c) {
            const double mx = static_cast<double>(window(sa, r, c)) / kN;
            const double my = static_cast<double>(window(sb, r, c)) / kN;
            const double vx = static_cast<double>(window(saa, r, c)) / kN - mx * mx;
            const double vy = static_cast<double>(window(sbb, r, c)) / kN - my * my;
            const double cxy = static_cast<double>(window(sab, r, c)) / kN - mx * my;
            const double num = (2.0 * mx * my + kC1) * (2.0 * cxy + kC2);
            const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
            total += num / den;
            ++windows;
        }
    }
    return std::clamp(total / static_cast<double>(windows) + 1.0, 0.0, 2.0);
}

// ---------------------------------------------------------------------------

HfomResult hfom_pipeline(std::span<const PoolEntry> pool, const HfomConfig& cfg) {
    HfomResult r;
    const auto selected = select_best_standard(pool, cfg.n);
    std::vector<GrayImage> raw;
    for (const auto& e : selected) {
        r.selected_ids.push_back(e.id);
        raw.push_back(e.image);
    }
    require_same_shape(raw);
    if (!raw[0].square()) throw Error("HFOM input images must be square; crop them first");
    r.stages.push_back({"No Change", common_pixel_count(raw)});

    std::vector<GrayImage> binary;
    for (const auto& img : raw) binary.push_back(binarize(img, cfg.threshold));
    r.stages.push_back({"Binarization", common_pixel_count(binary)});

    r.aligned = min_rotate_max_flow(make_stack(std::move(binary)));
    r.stages.push_back({"Fingerprint Rotation", r.aligned.common_count});

    for (const auto& img : r.aligned.images) {
        const auto grid = split_blocks(img, cfg.block_side);
        r.initial_maps.push_back(orientation_map(grid.padded, cfg.block_side));
    }
    r.stages.push_back({"Ridge Orientation Fields Generation", common_pixel_count(r.initial_maps)});

    r.refined_maps = refine_blocks(r.initial_maps);
    r.stages.push_back({"Orientation Map Modification at Block Level", common_pixel_count(r.refined_maps)});

    r.hfom = assemble_hfom(r.refined_maps, cfg.assignment_seed);
    return r;
}

std::string stage_report(const HfomResult& r) {
    std::ostringstream os;
    std::size_t width = 5;
    for (const auto& s : r.stages) width = std::max(width, s.stage.size());
    os << "Step" << std::string(width - 4 + 2, ' ') << "Common pixels\n";
    os << std::string(width + 2 + 13, '-') << '\n';
    for (const auto& s : r.stages) {
        os << s.stage << std::string(width - s.stage.size() + 2, ' ') << s.common_pixels << '\n';
    }
    os << "\nselected:";
    for (const auto& id : r.selected_ids) os << ' ' << id;
    os << "\nquadrants:";
    for (const auto& q : r.hfom.provenance) os << ' ' << q.quadrant << "<-" << q.source;
    os << '\n';
    return os.str();
}

}  // namespace fprint
