#include <cmath>

#include "doctest.h"
#include "timbre/gradcheck.hpp"

using namespace timbre;

namespace {

// conv + ELU + pool branch into a dense softmax head
arch::ArchSpec small_stack() {
    arch::ArchSpec s;
    s.arch_id = "phoneme_single";
    s.input_m = 12;
    s.input_n = 10;
    s.branches.push_back({3, 5, 3, 2, nn::kPoolFull, nn::Padding::valid, false});
    s.merge = arch::MergeKind::flatten_concat;
    s.trunk.push_back(arch::TrunkLayer::dense(4, false));
    s.output = arch::OutputKind::softmax;
    s.output_units = 4;
    return s;
}

arch::ArchSpec linear_stack() {
    arch::ArchSpec s;
    s.arch_id = "mlp_baseline";
    s.input_m = 6;
    s.input_n = 5;
    s.trunk.push_back(arch::TrunkLayer::dense(8, false));
    s.trunk.push_back(arch::TrunkLayer::dense(3, false));
    s.output = arch::OutputKind::softmax;
    s.output_units = 3;
    return s;
}

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, Rng& rng) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.gaussian());
    return t;
}

}  // namespace

TEST_CASE("analytic gradients of a conv stack match finite differences") {
    auto report = gradcheck::check_arch(small_stack());
    CHECK(report.max_rel_err < 1e-4);
    CHECK(!report.rows.empty());
    for (const auto& row : report.rows) {
        CAPTURE(row.tensor);
        CHECK(row.checked > 0);
        CHECK(row.max_rel_err < 1e-4);
    }
}

TEST_CASE("dense-only stack is exact up to rounding") {
    auto report = gradcheck::check_arch(linear_stack());
    CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("sigmoid output path also passes") {
    auto s = small_stack();
    s.output = arch::OutputKind::sigmoid;
    auto report = gradcheck::check_arch(s);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("the error measure flags a corrupted gradient") {
    // doubling the analytic gradient must push the reported relative error
    // past 0.5 under the same comparison rule the checker uses
    Rng rng(3);
    nn::Dense<double> dense("d", 6, 4);
    dense.init(rng);
    Tensor<double> x = random_tensor<double>({2, 6}, rng);
    Tensor<double> t({2, 4});
    t.data[1] = 1.0;
    t.data[4 + 2] = 1.0;

    auto loss = [&] {
        auto y = dense.forward(x, nn::Mode::train);
        Tensor<double> g;
        return double(nn::softmax_xent(y, t, g));
    };
    auto y = dense.forward(x, nn::Mode::train);
    Tensor<double> g;
    nn::softmax_xent(y, t, g);
    dense.weights().reset_grad();
    dense.bias().reset_grad();
    dense.backward(g);

    double max_rel = 0.0;
    auto& w = dense.weights();
    for (std::size_t i = 0; i < w.value.data.size(); ++i) {
        const double corrupted = 2.0 * w.grad.data[i];
        const double keep = w.value.data[i];
        const double h = 1e-5 * std::max(1.0, std::abs(keep));
        w.value.data[i] = keep + h;
        const double lp = loss();
        w.value.data[i] = keep - h;
        const double lm = loss();
        w.value.data[i] = keep;
        const double numeric = (lp - lm) / (2.0 * h);
        if (std::abs(numeric) < 1e-4) continue;  // corruption of ~0 stays ~0
        max_rel = std::max(max_rel, std::abs(corrupted - numeric) /
                                        std::max({std::abs(corrupted), std::abs(numeric), 1e-6}));
    }
    CHECK(max_rel > 0.5);
}

TEST_CASE("full builders suggest a reduced but valid check width") {
    for (const auto& id : arch::arch_ids()) {
        CAPTURE(id);
        auto spec = arch::build(id);
        const int n = gradcheck::suggested_input_n(spec);
        CHECK(n >= 1);
        CHECK(n <= spec.input_n);
        // the reduced width must still instantiate
        CHECK_NOTHROW(Model<double>(spec, 1, n));
    }
}

TEST_CASE("time translation equivariance of valid convolution") {
    Rng rng(7);
    nn::Conv2d<float> conv("c", 1, 2, 3, 4, nn::Padding::valid);
    conv.init(rng);

    const int M = 10, N = 20, k = 5;
    Tensor<float> x({1, 1, M, N});
    // content confined to the first half of the time axis
    for (int m = 0; m < M; ++m)
        for (int t = 0; t < 8; ++t) x.data[std::size_t(m) * N + t] = float(rng.gaussian());
    Tensor<float> xs({1, 1, M, N});
    for (int m = 0; m < M; ++m)
        for (int t = 0; t < 8; ++t) xs.data[std::size_t(m) * N + t + k] = x.data[std::size_t(m) * N + t];

    auto y = conv.forward(x, nn::Mode::infer);
    auto ys = conv.forward(xs, nn::Mode::infer);
    const int oN = y.dim(3);
    for (int f = 0; f < 2; ++f)
        for (int m = 0; m < y.dim(2); ++m)
            for (int t = 0; t + k < oN; ++t)
                CHECK(ys.data[(std::size_t(f) * y.dim(2) + m) * oN + t + k] ==
                      y.data[(std::size_t(f) * y.dim(2) + m) * oN + t]);
}

TEST_CASE("frequency max-pool confers pitch invariance") {
    Rng rng(9);
    nn::Conv2d<float> conv("c", 1, 3, 5, 3, nn::Padding::valid);
    conv.init(rng);
    nn::MaxPool<float> pool(nn::kPoolFull, 2);

    const int M = 24, N = 12, k = 4;
    Tensor<float> x({1, 1, M, N});
    // support at least k bins away from both frequency edges
    for (int m = 8; m < 14; ++m)
        for (int t = 0; t < N; ++t) x.data[std::size_t(m) * N + t] = float(rng.gaussian());
    Tensor<float> xs({1, 1, M, N});
    for (int m = 8; m < 14; ++m)
        for (int t = 0; t < N; ++t) xs.data[std::size_t(m + k) * N + t] = x.data[std::size_t(m) * N + t];

    auto y = pool.forward(conv.forward(x, nn::Mode::infer), nn::Mode::infer);
    auto ys = pool.forward(conv.forward(xs, nn::Mode::infer), nn::Mode::infer);
    CHECK(y.shape == ys.shape);
    CHECK(y.data == ys.data);  // exact: the max travels with the shift
}

TEST_CASE("tall one-frame filters with full time pooling are time invariant") {
    Rng rng(11);
    nn::Conv2d<float> conv("c", 1, 4, 7, 1, nn::Padding::valid);
    conv.init(rng);
    nn::MaxPool<float> pool(3, nn::kPoolFull);

    const int M = 20, N = 16, k = 6;
    Tensor<float> x({1, 1, M, N});
    for (int m = 0; m < M; ++m)
        for (int t = 0; t < 10; ++t) x.data[std::size_t(m) * N + t] = float(rng.gaussian());
    Tensor<float> xs({1, 1, M, N});
    for (int m = 0; m < M; ++m)
        for (int t = 0; t < 10; ++t) xs.data[std::size_t(m) * N + t + k] = x.data[std::size_t(m) * N + t];

    auto y = pool.forward(conv.forward(x, nn::Mode::infer), nn::Mode::infer);
    auto ys = pool.forward(conv.forward(xs, nn::Mode::infer), nn::Mode::infer);
    CHECK(y.shape == ys.shape);
    CHECK(y.data == ys.data);
}
