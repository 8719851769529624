#include <cmath>

#include "timbre/arch.hpp"

namespace timbre::arch {

namespace {

using nn::kPoolFull;
using nn::Padding;

std::pair<int, int> conv_out(int M, int N, int m, int n, Padding pad, const std::string& where) {
    const int mo = pad == Padding::same_both ? M : M - m + 1;
    const int no = pad == Padding::valid ? N - n + 1 : N;
    if (mo < 1 || no < 1)
        throw ArchError("shape underflow at " + where + ": filter " + std::to_string(m) + "x" +
                        std::to_string(n) + " on " + std::to_string(M) + "x" + std::to_string(N));
    return {mo, no};
}

std::pair<int, int> pool_out(int M, int N, int pm, int pn, const std::string& where) {
    const int em = pm == kPoolFull ? M : pm;
    const int en = pn == kPoolFull ? N : pn;
    if (em > M || en > N)
        throw ArchError("shape underflow at " + where + ": pool extent larger than axis");
    return {M / em, N / en};
}

// Output sizes of the small-rectangular and MLP budget solvers are chosen at
// build time to land on the published totals.
int solve_small_rect_filters(long target) {
    int best_f = 1;
    long best_err = -1;
    for (int f = 1; f <= 256; ++f) {
        const long count = 36L * f * f + 1034L * f + 50;
        const long err = std::llabs(count - target);
        if (best_err < 0 || err < best_err) {
            best_err = err;
            best_f = f;
        }
    }
    return best_f;
}

int solve_mlp_hidden(long input_dim, long target, int output_units) {
    int best_h = 1;
    long best_err = -1;
    for (int h = 1; h <= 4096; ++h) {
        const long count = (input_dim + 1) * h + long(h + 1) * h + long(h + 1) * output_units;
        const long err = std::llabs(count - target);
        if (best_err < 0 || err < best_err) {
            best_err = err;
            best_h = h;
        }
    }
    return best_h;
}

}  // namespace

ArchSpec build_phoneme_single() {
    ArchSpec s;
    s.arch_id = "phoneme_single";
    s.input_m = 80;
    s.input_n = 21;
    // 128x 50x1, 128x 70x1, 64x 50x5, 64x 70x5, 32x 50x10, 32x 70x10; valid
    // padding; MP(2, full time) per branch.
    const int counts[3] = {128, 64, 32};
    const int widths[3] = {1, 5, 10};
    for (int i = 0; i < 3; ++i)
        for (int m : {50, 70})
            s.branches.push_back({counts[i], m, widths[i], 2, kPoolFull, Padding::valid, false});
    s.merge = MergeKind::flatten_concat;
    s.trunk.push_back(TrunkLayer::dropout(0.3));
    s.trunk.push_back(TrunkLayer::dense(32, false));
    s.output = OutputKind::softmax;
    s.output_units = 32;
    s.published_param_count = 222000;
    return s;
}

ArchSpec build_irmas_single() {
    ArchSpec s;
    s.arch_id = "irmas_single";
    s.input_m = 96;
    s.input_n = 128;
    const int counts[3] = {128, 64, 32};
    const int widths[3] = {1, 3, 5};
    for (int i = 0; i < 3; ++i)
        for (int m : {5, 80})
            s.branches.push_back({counts[i], m, widths[i], kPoolFull, 16, Padding::same_both, false});
    s.merge = MergeKind::flatten_concat;
    s.trunk.push_back(TrunkLayer::dropout(0.5));
    s.trunk.push_back(TrunkLayer::dense(11, false));
    s.output = OutputKind::softmax;
    s.output_units = 11;
    s.published_param_count = 62000;
    return s;
}

ArchSpec build_irmas_multi() {
    ArchSpec s;
    s.arch_id = "irmas_multi";
    s.input_m = 96;
    s.input_n = 128;
    const int counts[3] = {128, 64, 32};
    const int widths[3] = {1, 3, 5};
    for (int i = 0; i < 3; ++i)
        for (int m : {5, 80})
            s.branches.push_back({counts[i], m, widths[i], 12, 16, Padding::same_both, true});
    s.merge = MergeKind::channel_concat;
    s.trunk.push_back(TrunkLayer::dropout(0.25));
    s.trunk.push_back(TrunkLayer::conv(128, 3, 3, Padding::same_both, true));
    s.trunk.push_back(TrunkLayer::pool(2, 2));
    s.trunk.push_back(TrunkLayer::dropout(0.25));
    s.trunk.push_back(TrunkLayer::conv(128, 3, 3, Padding::same_both, true));
    s.trunk.push_back(TrunkLayer::pool(2, 2));
    s.trunk.push_back(TrunkLayer::dropout(0.25));
    s.trunk.push_back(TrunkLayer::dense(256, true));
    s.trunk.push_back(TrunkLayer::dropout(0.5));
    s.trunk.push_back(TrunkLayer::dense(11, false));
    s.output = OutputKind::softmax;
    s.output_units = 11;
    s.published_param_count = 743000;
    return s;
}

ArchSpec build_mtt_proposed(int widen_factor) {
    if (widen_factor != 1 && widen_factor != 2 && widen_factor != 4)
        throw ArchError("mtt_proposed: widen factor must be 1, 2 or 4");
    ArchSpec s;
    s.arch_id = "mtt_proposed";
    s.widen_factor = widen_factor;
    s.input_m = 128;
    s.input_n = 187;
    const int heights[3] = {100, 75, 25};
    const int base_counts[3][4] = {{10, 6, 3, 3}, {15, 10, 5, 5}, {15, 10, 5, 5}};
    const int widths[4] = {1, 3, 5, 7};
    for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 4; ++w)
            s.branches.push_back({base_counts[h][w] * widen_factor, heights[h], widths[w],
                                  kPoolFull, 4, Padding::same_time_only, false});
    s.merge = MergeKind::channel_concat;
    // Dieleman-style backend; the widening factor scales its conv width too,
    // which is what reproduces the declared x2/x4 totals.
    s.trunk.push_back(TrunkLayer::conv(32 * widen_factor, 1, 8, Padding::valid, false));
    s.trunk.push_back(TrunkLayer::pool(1, 4));
    s.trunk.push_back(TrunkLayer::dense(100, true));
    s.trunk.push_back(TrunkLayer::dropout(0.5));
    s.trunk.push_back(TrunkLayer::dense(50, false));
    s.output = OutputKind::sigmoid;
    s.output_units = 50;
    s.published_param_count = widen_factor == 1 ? 75000 : widen_factor == 2 ? 191000 : 565000;
    return s;
}

ArchSpec build_mtt_small_rect() {
    ArchSpec s;
    s.arch_id = "mtt_small_rect";
    s.input_m = 128;
    s.input_n = 187;
    s.merge = MergeKind::none;
    const int f = solve_small_rect_filters(75000);
    for (int layer = 0; layer < 5; ++layer) {
        s.trunk.push_back(TrunkLayer::conv(f, 3, 3, Padding::same_both, true));
        s.trunk.push_back(TrunkLayer::pool(2, 2));
    }
    s.trunk.push_back(TrunkLayer::dense(50, false));
    s.output = OutputKind::sigmoid;
    s.output_units = 50;
    s.published_param_count = 75000;
    return s;
}

ArchSpec build_mlp_baseline(int input_m, int input_n) {
    ArchSpec s;
    s.arch_id = "mlp_baseline";
    s.input_m = input_m;
    s.input_n = input_n;
    s.merge = MergeKind::none;
    const int h = solve_mlp_hidden(long(input_m) * input_n, 481000, 32);
    s.trunk.push_back(TrunkLayer::dense(h, true));
    s.trunk.push_back(TrunkLayer::dense(h, true));
    s.trunk.push_back(TrunkLayer::dense(32, false));
    s.output = OutputKind::softmax;
    s.output_units = 32;
    s.published_param_count = 481000;
    return s;
}

ArchSpec build(const std::string& arch_id, int widen_factor) {
    if (arch_id == "phoneme_single") return build_phoneme_single();
    if (arch_id == "irmas_single") return build_irmas_single();
    if (arch_id == "irmas_multi") return build_irmas_multi();
    if (arch_id == "mtt_proposed") return build_mtt_proposed(widen_factor);
    if (arch_id == "mtt_small_rect") return build_mtt_small_rect();
    if (arch_id == "mlp_baseline") return build_mlp_baseline();
    throw ArchError("unknown architecture id: " + arch_id);
}

std::vector<std::string> arch_ids() {
    return {"phoneme_single", "irmas_single",  "irmas_multi",
            "mtt_proposed",   "mtt_small_rect", "mlp_baseline"};
}

std::vector<ShapeRow> propagate_shapes(const ArchSpec& spec) {
    std::vector<ShapeRow> rows;
    rows.push_back({"input", {1, spec.input_m, spec.input_n}, 0});

    int C = 1, M = spec.input_m, N = spec.input_n;
    long D = 0;
    bool flat = false;

    if (!spec.branches.empty()) {
        int merged_c = 0;
        long merged_d = 0;
        int ref_m = -1, ref_n = -1;
        for (std::size_t i = 0; i < spec.branches.size(); ++i) {
            const auto& br = spec.branches[i];
            const std::string name = "branch" + std::to_string(i);
            auto [cm, cn] = conv_out(M, N, br.filter_m, br.filter_n, br.padding, name);
            long p = long(br.n_filters) * br.filter_m * br.filter_n + br.n_filters;
            if (br.batch_norm) p += 4L * br.n_filters;
            auto [pm, pn] = pool_out(cm, cn, br.pool_m, br.pool_n, name);
            rows.push_back({name + " conv " + std::to_string(br.filter_m) + "x" +
                                std::to_string(br.filter_n),
                            {br.n_filters, cm, cn},
                            p});
            rows.push_back({name + " pool", {br.n_filters, pm, pn}, 0});
            if (spec.merge == MergeKind::channel_concat) {
                if (ref_m < 0) {
                    ref_m = pm;
                    ref_n = pn;
                } else if (ref_m != pm || ref_n != pn) {
                    throw ArchError("branches not merge-compatible along channel axis");
                }
            }
            merged_c += br.n_filters;
            merged_d += long(br.n_filters) * pm * pn;
        }
        if (spec.merge == MergeKind::channel_concat) {
            C = merged_c;
            M = ref_m;
            N = ref_n;
            rows.push_back({"merge (channels)", {C, M, N}, 0});
        } else if (spec.merge == MergeKind::flatten_concat) {
            D = merged_d;
            flat = true;
            rows.push_back({"merge (flatten)", {int(D)}, 0});
        } else {
            throw ArchError("branches present but no merge rule");
        }
    }

    for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
        const auto& l = spec.trunk[i];
        const std::string name = "trunk" + std::to_string(i);
        switch (l.kind) {
            case TrunkLayer::Kind::conv: {
                if (flat) throw ArchError(name + ": conv after flatten");
                auto [cm, cn] = conv_out(M, N, l.filter_m, l.filter_n, l.padding, name);
                long p = long(l.n_filters) * C * l.filter_m * l.filter_n + l.n_filters;
                if (l.batch_norm) p += 4L * l.n_filters;
                C = l.n_filters;
                M = cm;
                N = cn;
                rows.push_back({name + " conv " + std::to_string(l.filter_m) + "x" +
                                    std::to_string(l.filter_n),
                                {C, M, N},
                                p});
                break;
            }
            case TrunkLayer::Kind::pool: {
                if (flat) throw ArchError(name + ": pool after flatten");
                auto [pm, pn] = pool_out(M, N, l.pool_m, l.pool_n, name);
                M = pm;
                N = pn;
                rows.push_back({name + " pool", {C, M, N}, 0});
                break;
            }
            case TrunkLayer::Kind::dense: {
                if (!flat) {
                    D = long(C) * M * N;
                    flat = true;
                }
                const long p = (D + 1) * l.units;
                D = l.units;
                rows.push_back({name + " dense " + std::to_string(l.units), {int(D)}, p});
                break;
            }
            case TrunkLayer::Kind::dropout:
                rows.push_back(
                    {name + " dropout " + std::to_string(l.p), flat ? std::vector<int>{int(D)}
                                                                    : std::vector<int>{C, M, N},
                     0});
                break;
        }
    }

    if (rows.empty() || !flat || D != spec.output_units)
        throw ArchError("output layer dimension does not match declared units");
    return rows;
}

long param_count(const ArchSpec& spec) {
    long total = 0;
    for (const auto& row : propagate_shapes(spec)) total += row.params;
    return total;
}

namespace {

std::string padding_str(Padding p) {
    switch (p) {
        case Padding::valid: return "valid";
        case Padding::same_time_only: return "same_time_only";
        default: return "same_both";
    }
}
Padding padding_from(const std::string& s) {
    if (s == "valid") return Padding::valid;
    if (s == "same_time_only") return Padding::same_time_only;
    if (s == "same_both") return Padding::same_both;
    throw ArchError("bad padding: " + s);
}

}  // namespace

nlohmann::json to_json(const ArchSpec& spec) {
    nlohmann::json j;
    j["arch_id"] = spec.arch_id;
    j["input"] = {{"m", spec.input_m}, {"n", spec.input_n}};
    j["widen_factor"] = spec.widen_factor;
    j["merge"] = spec.merge == MergeKind::none             ? "none"
                 : spec.merge == MergeKind::flatten_concat ? "flatten_concat"
                                                           : "channel_concat";
    j["output"] = {{"kind", spec.output == OutputKind::softmax ? "softmax" : "sigmoid"},
                   {"units", spec.output_units}};
    j["published_param_count"] = spec.published_param_count;
    j["branches"] = nlohmann::json::array();
    for (const auto& b : spec.branches)
        j["branches"].push_back({{"n_filters", b.n_filters},
                                 {"filter_m", b.filter_m},
                                 {"filter_n", b.filter_n},
                                 {"pool_m", b.pool_m},
                                 {"pool_n", b.pool_n},
                                 {"padding", padding_str(b.padding)},
                                 {"batch_norm", b.batch_norm}});
    j["trunk"] = nlohmann::json::array();
    for (const auto& l : spec.trunk) {
        nlohmann::json lj;
        switch (l.kind) {
            case TrunkLayer::Kind::conv:
                lj = {{"kind", "conv"},        {"n_filters", l.n_filters},
                      {"filter_m", l.filter_m}, {"filter_n", l.filter_n},
                      {"padding", padding_str(l.padding)}, {"batch_norm", l.batch_norm}};
                break;
            case TrunkLayer::Kind::pool:
                lj = {{"kind", "pool"}, {"pool_m", l.pool_m}, {"pool_n", l.pool_n}};
                break;
            case TrunkLayer::Kind::dense:
                lj = {{"kind", "dense"}, {"units", l.units}, {"elu", l.elu}};
                break;
            case TrunkLayer::Kind::dropout:
                lj = {{"kind", "dropout"}, {"p", l.p}};
                break;
        }
        j["trunk"].push_back(lj);
    }
    return j;
}

ArchSpec from_json(const nlohmann::json& j) {
    ArchSpec s;
    s.arch_id = j.at("arch_id").get<std::string>();
    s.input_m = j.at("input").at("m").get<int>();
    s.input_n = j.at("input").at("n").get<int>();
    s.widen_factor = j.value("widen_factor", 1);
    const std::string merge = j.at("merge").get<std::string>();
    s.merge = merge == "none"             ? MergeKind::none
              : merge == "flatten_concat" ? MergeKind::flatten_concat
                                          : MergeKind::channel_concat;
    s.output = j.at("output").at("kind").get<std::string>() == "softmax" ? OutputKind::softmax
                                                                         : OutputKind::sigmoid;
    s.output_units = j.at("output").at("units").get<int>();
    s.published_param_count = j.value("published_param_count", 0L);
    for (const auto& bj : j.at("branches")) {
        BranchSpec b;
        b.n_filters = bj.at("n_filters").get<int>();
        b.filter_m = bj.at("filter_m").get<int>();
        b.filter_n = bj.at("filter_n").get<int>();
        b.pool_m = bj.at("pool_m").get<int>();
        b.pool_n = bj.at("pool_n").get<int>();
        b.padding = padding_from(bj.at("padding").get<std::string>());
        b.batch_norm = bj.at("batch_norm").get<bool>();
        s.branches.push_back(b);
    }
    for (const auto& lj : j.at("trunk")) {
        const std::string kind = lj.at("kind").get<std::string>();
        if (kind == "conv") {
            s.trunk.push_back(TrunkLayer::conv(lj.at("n_filters").get<int>(),
                                               lj.at("filter_m").get<int>(),
                                               lj.at("filter_n").get<int>(),
                                               padding_from(lj.at("padding").get<std::string>()),
                                               lj.at("batch_norm").get<bool>()));
        } else if (kind == "pool") {
            s.trunk.push_back(TrunkLayer::pool(lj.at("pool_m").get<int>(), lj.at("pool_n").get<int>()));
        } else if (kind == "dense") {
            s.trunk.push_back(TrunkLayer::dense(lj.at("units").get<int>(), lj.at("elu").get<bool>()));
        } else if (kind == "dropout") {
            s.trunk.push_back(TrunkLayer::dropout(lj.at("p").get<double>()));
        } else {
            throw ArchError("bad trunk layer kind: " + kind);
        }
    }
    return s;
}

}  // namespace timbre::arch
