#pragma once

#include <string>
#include <vector>

#include "timbre/nn.hpp"
#include "json.hpp"

namespace timbre::arch {

struct ArchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One first-layer branch: conv (+ optional batch norm) + ELU + max-pool.
struct BranchSpec {
    int n_filters = 0;
    int filter_m = 0;
    int filter_n = 0;
    int pool_m = 1;  // nn::kPoolFull collapses the axis
    int pool_n = 1;
    nn::Padding padding = nn::Padding::valid;
    bool batch_norm = false;
};

enum class MergeKind { none, flatten_concat, channel_concat };
enum class OutputKind { softmax, sigmoid };

struct TrunkLayer {
    enum class Kind { conv, pool, dense, dropout };
    Kind kind = Kind::dense;
    // conv
    int n_filters = 0, filter_m = 0, filter_n = 0;
    nn::Padding padding = nn::Padding::valid;
    bool batch_norm = false;
    // pool
    int pool_m = 1, pool_n = 1;
    // dense
    int units = 0;
    bool elu = true;
    // dropout
    double p = 0.0;

    static TrunkLayer conv(int f, int m, int n, nn::Padding pad, bool bn) {
        TrunkLayer l;
        l.kind = Kind::conv;
        l.n_filters = f;
        l.filter_m = m;
        l.filter_n = n;
        l.padding = pad;
        l.batch_norm = bn;
        return l;
    }
    static TrunkLayer pool(int pm, int pn) {
        TrunkLayer l;
        l.kind = Kind::pool;
        l.pool_m = pm;
        l.pool_n = pn;
        return l;
    }
    static TrunkLayer dense(int units, bool elu) {
        TrunkLayer l;
        l.kind = Kind::dense;
        l.units = units;
        l.elu = elu;
        return l;
    }
    static TrunkLayer dropout(double p) {
        TrunkLayer l;
        l.kind = Kind::dropout;
        l.p = p;
        return l;
    }
};

// Declarative layer-graph description: parallel conv branches on the input,
// a merge rule, then a sequential trunk ending in the output dense layer.
struct ArchSpec {
    std::string arch_id;
    int input_m = 0, input_n = 0;
    std::vector<BranchSpec> branches;
    MergeKind merge = MergeKind::none;
    std::vector<TrunkLayer> trunk;
    OutputKind output = OutputKind::softmax;
    int output_units = 0;
    int widen_factor = 1;
    long published_param_count = 0;  // 0 when no reference total is declared
};

// Builders for the architectures evaluated in the experiments.
ArchSpec build_phoneme_single();
ArchSpec build_irmas_single();
ArchSpec build_irmas_multi();
ArchSpec build_mtt_proposed(int widen_factor);  // 1, 2 or 4
ArchSpec build_mtt_small_rect();
ArchSpec build_mlp_baseline(int input_m = 80, int input_n = 21);

// By id string, e.g. "mtt_proposed" with widen.
ArchSpec build(const std::string& arch_id, int widen_factor = 1);
std::vector<std::string> arch_ids();

struct ShapeRow {
    std::string name;
    std::vector<int> shape;  // (C, M, N) or (D,)
    long params = 0;
};

// Deterministic per-layer shape table; throws on underflow.
std::vector<ShapeRow> propagate_shapes(const ArchSpec& spec);

// Analytic parameter total (weights + biases + batch-norm scalars including
// running statistics); equals the serialized scalar count of a checkpoint.
long param_count(const ArchSpec& spec);

nlohmann::json to_json(const ArchSpec& spec);
ArchSpec from_json(const nlohmann::json& j);

}  // namespace timbre::arch
