#pragma once

#include "timbre/arch.hpp"
#include "timbre/model.hpp"

namespace timbre::gradcheck {

struct TensorReport {
    std::string tensor;
    double max_rel_err = 0.0;
    int checked = 0;
};

struct Report {
    std::vector<TensorReport> rows;
    double max_rel_err = 0.0;
};

struct Options {
    std::uint64_t seed = 7;
    // Parameters checked per tensor; tensors at most this size are checked
    // exhaustively, larger ones on a deterministic random subsample.
    int samples_per_tensor = 12;
    // Central-difference step, scaled by max(1, |w|).
    double step = 1e-5;
    // Shrink the time axis to keep runtime bounded; 0 keeps the architecture input.
    int input_n_override = 0;
};

// Compares analytic parameter gradients of the instantiated model (64-bit
// arithmetic, dropout disabled, train-mode batch norm) against central finite
// differences of the loss.
Report check_arch(const arch::ArchSpec& spec, const Options& opts = {});

// Reduced time-axis size that keeps full-architecture checks fast while
// leaving every pooling stage non-degenerate.
int suggested_input_n(const arch::ArchSpec& spec);

}  // namespace timbre::gradcheck
