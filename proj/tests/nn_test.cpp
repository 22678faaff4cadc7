#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "setq/nn/adam.hpp"
#include "setq/nn/checkpoint.hpp"
#include "setq/nn/conv2d.hpp"
#include "setq/nn/dense.hpp"
#include "setq/nn/grad_check.hpp"
#include "setq/nn/lstm.hpp"
#include "setq/nn/mlp.hpp"

#include "support.hpp"

using namespace setq;

namespace {

template <typename S>
nn::Dense<S> identity_dense(int dim, nn::Activation act) {
    nn::Dense<S> d(dim, dim, act);
    for (int i = 0; i < dim; ++i) d.w.at(i, i) = S(1);
    return d;
}

}  // namespace

TEST_CASE("dense forward: identity weights") {
    auto lin = identity_dense<float>(2, nn::Activation::Linear);
    nn::Tensor<float> x({1, 2}, {1.0f, 2.0f});
    auto y = lin.forward(x);
    CHECK(y[0] == 1.0f);
    CHECK(y[1] == 2.0f);

    auto relu = identity_dense<float>(2, nn::Activation::Relu);
    nn::Tensor<float> xn({1, 2}, {-1.0f, 2.0f});
    auto yr = relu.forward(xn);
    CHECK(yr[0] == 0.0f);
    CHECK(yr[1] == 2.0f);
}

TEST_CASE("dense forward: hand-computed case") {
    // W=[[1,1],[0,2]], b=(0.5,0), ReLU, input (1,-1) -> (0.5, 0)
    nn::Dense<float> d(2, 2, nn::Activation::Relu);
    d.w = nn::Tensor<float>({2, 2}, {1, 1, 0, 2});
    d.b = nn::Tensor<float>({2}, {0.5f, 0});
    auto y = d.forward(nn::Tensor<float>({1, 2}, {1.0f, -1.0f}));
    CHECK(y[0] == doctest::Approx(0.5));
    CHECK(y[1] == 0.0f);
}

TEST_CASE("dense forward: shape mismatch throws") {
    nn::Dense<float> d(3, 2, nn::Activation::Linear);
    nn::Tensor<float> bad({1, 4});
    CHECK_THROWS_WITH_AS(d.forward(bad), doctest::Contains("incompatible"), std::invalid_argument);
}

TEST_CASE("dense forward is batch-wise independent") {
    nn::Rng rng(11);
    nn::Dense<float> d(4, 3, nn::Activation::Relu);
    d.init(rng);
    nn::Tensor<float> batch({5, 4});
    for (auto& v : batch.data) v = static_cast<float>(rng.uniform(-1, 1));
    auto y = d.forward(batch);
    for (int r = 0; r < 5; ++r) {
        nn::Tensor<float> row({1, 4});
        for (int c = 0; c < 4; ++c) row[static_cast<size_t>(c)] = batch.at(r, c);
        auto yr = d.forward(row);
        for (int c = 0; c < 3; ++c) CHECK(yr[static_cast<size_t>(c)] == y.at(r, c));
    }
}

TEST_CASE("dense backward: linear map transpose and dead relu") {
    nn::Dense<float> d(3, 2, nn::Activation::Linear);
    d.w = nn::Tensor<float>({2, 3}, {1, 2, 3, 4, 5, 6});
    d.forward(nn::Tensor<float>({1, 3}, {0.1f, 0.2f, 0.3f}));
    d.zero_grad();
    auto gin = d.backward(nn::Tensor<float>({1, 2}, {1.0f, 0.0f}));
    CHECK(gin[0] == 1.0f);  // first row of W
    CHECK(gin[1] == 2.0f);
    CHECK(gin[2] == 3.0f);

    nn::Dense<float> r(1, 1, nn::Activation::Relu);
    r.w.at(0, 0) = 1.0f;
    r.b[0] = -5.0f;  // pre-activation negative
    r.forward(nn::Tensor<float>({1, 1}, {1.0f}));
    r.zero_grad();
    auto g = r.backward(nn::Tensor<float>({1, 1}, {1.0f}));
    CHECK(g[0] == 0.0f);
    CHECK(r.gw[0] == 0.0f);
}

TEST_CASE("dense backward without forward throws") {
    nn::Dense<float> d(2, 2, nn::Activation::Linear);
    CHECK_THROWS_AS(d.backward(nn::Tensor<float>({1, 2})), std::logic_error);
}

TEST_CASE("dense backward matches central differences") {
    nn::Rng rng(3);
    nn::Dense<double> d(4, 3, nn::Activation::Relu);
    d.init(rng);
    nn::Tensor<double> x({2, 4});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<double> probe = {0.3, -0.7, 1.1, 0.5, -0.2, 0.9};

    auto loss_only = [&]() {
        auto y = d.forward(x);
        double l = 0.0;
        for (size_t i = 0; i < y.size(); ++i) l += probe[i] * y[i];
        return l;
    };
    auto loss_grad = [&]() {
        d.zero_grad();
        auto y = d.forward(x);
        double l = 0.0;
        for (size_t i = 0; i < y.size(); ++i) l += probe[i] * y[i];
        nn::Tensor<double> g({2, 3}, probe);
        d.backward(g);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    d.register_params(ps, "d");
    d.register_grads(gs, "d");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("lstm: zero weights give zero next state") {
    nn::LstmCell<double> cell(3, 4);
    std::vector<double> x = {0.5, -1.0, 2.0};
    std::vector<double> h(4, 0.0), c(4, 0.0);
    auto [h2, c2] = cell.step(x, h, c);
    for (double v : h2) CHECK(v == 0.0);
    for (double v : c2) CHECK(v == 0.0);
}

TEST_CASE("lstm: saturated forget gate preserves the cell state") {
    nn::LstmCell<double> cell(2, 3);
    for (int k = 0; k < 3; ++k) cell.b[static_cast<size_t>(3 + k)] = 20.0;  // forget block
    std::vector<double> x = {0.3, -0.4};
    std::vector<double> h(3, 0.0);
    std::vector<double> c = {1.5, -0.5, 2.0};
    auto [h2, c2] = cell.step(x, h, c);
    for (int k = 0; k < 3; ++k) CHECK(c2[static_cast<size_t>(k)] == doctest::Approx(c[static_cast<size_t>(k)]).epsilon(1e-8));
}

TEST_CASE("lstm backward matches central differences") {
    nn::Rng rng(17);
    nn::LstmCell<double> cell(3, 5);
    cell.init(rng);
    std::vector<double> x = {0.2, -0.6, 0.9};
    std::vector<double> h0(5), c0(5);
    for (auto& v : h0) v = rng.uniform(-1, 1);
    for (auto& v : c0) v = rng.uniform(-1, 1);
    std::vector<double> probe = {1.0, -0.5, 0.25, 0.7, -1.2};

    typename nn::LstmCell<double>::Cache cache;
    auto loss_only = [&]() {
        auto [h2, c2] = cell.step(x, h0, c0);
        double l = 0.0;
        for (size_t i = 0; i < h2.size(); ++i) l += probe[i] * h2[i] + 0.3 * probe[i] * c2[i];
        return l;
    };
    auto loss_grad = [&]() {
        cell.zero_grad();
        auto [h2, c2] = cell.step(x, h0, c0, &cache);
        double l = 0.0;
        std::vector<double> gh(h2.size()), gc(c2.size());
        for (size_t i = 0; i < h2.size(); ++i) {
            l += probe[i] * h2[i] + 0.3 * probe[i] * c2[i];
            gh[i] = probe[i];
            gc[i] = 0.3 * probe[i];
        }
        cell.backward(cache, gh, gc);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    cell.register_params(ps, "lstm");
    cell.register_grads(gs, "lstm");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("lstm: size mismatch throws") {
    nn::LstmCell<float> cell(3, 4);
    std::vector<float> x(2), h(4), c(4);
    CHECK_THROWS_AS(cell.step(x, h, c), std::invalid_argument);
}

TEST_CASE("conv2d: occupancy-grid shape run") {
    nn::Conv2d<float> conv(16, 1, 3, 1, 2, 1);
    nn::Tensor<float> x({1, 1, 80, 5});
    auto y = conv.forward(x);
    CHECK(y.shape == std::vector<int>{1, 16, 40, 5});
}

TEST_CASE("conv2d: zero input gives relu(bias)") {
    nn::Conv2d<float> conv(2, 1, 3, 1, 2, 1);
    conv.b[0] = 0.7f;
    conv.b[1] = -0.3f;
    nn::Tensor<float> x({1, 1, 8, 3});
    auto y = conv.forward(x);
    for (int oh = 0; oh < y.dim(2); ++oh) {
        for (int ow = 0; ow < y.dim(3); ++ow) {
            CHECK(y.data[(0 * 2 + 0) * 4 * 3 + oh * 3 + ow] == doctest::Approx(0.7));
            CHECK(y.data[(0 * 2 + 1) * static_cast<size_t>(4 * 3) + oh * 3 + ow] == 0.0f);
        }
    }
}

TEST_CASE("conv2d: 1x1 identity kernel is relu(input)") {
    nn::Conv2d<float> conv(1, 1, 1, 1, 1, 1);
    conv.k[0] = 1.0f;
    nn::Tensor<float> x({1, 1, 4, 3});
    nn::Rng rng(5);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    auto y = conv.forward(x);
    REQUIRE(y.shape == x.shape);
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == std::max(x[i], 0.0f));
}

TEST_CASE("conv2d: bad input shape throws") {
    nn::Conv2d<float> conv(4, 2, 3, 1, 2, 1);
    nn::Tensor<float> wrong_channels({1, 3, 8, 4});
    CHECK_THROWS_AS(conv.forward(wrong_channels), std::invalid_argument);
    nn::Tensor<float> wrong_rank({3, 8, 4});
    CHECK_THROWS_AS(conv.forward(wrong_rank), std::invalid_argument);
}

TEST_CASE("conv2d: padding always covers the kernel") {
    // ceil-mode zero padding extends the input to (out-1)*stride + k, which
    // is never smaller than the kernel; a giant kernel still runs.
    nn::Conv2d<float> conv(1, 1, 9, 9, 1, 1);
    nn::Tensor<float> x({1, 1, 4, 4});
    auto y = conv.forward(x);
    CHECK(y.shape == std::vector<int>{1, 1, 4, 4});
}

TEST_CASE("conv2d backward matches central differences") {
    nn::Rng rng(23);
    nn::Conv2d<double> c1(3, 2, 3, 1, 2, 1);
    c1.init(rng);
    nn::Tensor<double> x({1, 2, 10, 4});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<double> probe(3 * 5 * 4);
    for (auto& v : probe) v = rng.uniform(-1, 1);

    auto loss_only = [&]() {
        auto y = c1.forward(x);
        double l = 0.0;
        for (size_t i = 0; i < y.size(); ++i) l += probe[i] * y[i];
        return l;
    };
    auto loss_grad = [&]() {
        c1.zero_grad();
        auto y = c1.forward(x);
        double l = 0.0;
        for (size_t i = 0; i < y.size(); ++i) l += probe[i] * y[i];
        nn::Tensor<double> g(y.shape, probe);
        c1.backward(g);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    c1.register_params(ps, "c1");
    c1.register_grads(gs, "c1");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("adam: closed-form first step") {
    nn::Tensor<float> p({1}, {0.0f});
    nn::Tensor<float> g({1}, {1.0f});
    nn::ParameterSet<float> ps, gs;
    ps.add("p", &p);
    gs.add("p", &g);
    nn::AdamState<float> st(1e-4);
    nn::adam_step(ps, gs, st);
    CHECK(st.t == 1);
    CHECK(p[0] == doctest::Approx(-1e-4).epsilon(1e-6));
}

TEST_CASE("adam: zero gradient leaves params, bumps step counter") {
    nn::Tensor<float> p({3}, {1.0f, -2.0f, 0.5f});
    nn::Tensor<float> g({3});
    nn::ParameterSet<float> ps, gs;
    ps.add("p", &p);
    gs.add("p", &g);
    nn::AdamState<float> st(1e-3);
    nn::adam_step(ps, gs, st);
    CHECK(st.t == 1);
    CHECK(p[0] == 1.0f);
    CHECK(p[1] == -2.0f);
    CHECK(p[2] == 0.5f);
}

TEST_CASE("adam: symmetric updates for opposite gradients") {
    nn::Tensor<float> p({2}, {0.0f, 0.0f});
    nn::Tensor<float> g({2}, {3.0f, -3.0f});
    nn::ParameterSet<float> ps, gs;
    ps.add("p", &p);
    gs.add("p", &g);
    nn::AdamState<float> st(1e-3);
    nn::adam_step(ps, gs, st);
    CHECK(p[0] == doctest::Approx(-p[1]).epsilon(1e-9));
    CHECK(p[0] < 0.0f);
}

TEST_CASE("adam: misaligned names throw") {
    nn::Tensor<float> p({1}), g({1});
    nn::ParameterSet<float> ps, gs;
    ps.add("a", &p);
    gs.add("b", &g);
    nn::AdamState<float> st;
    CHECK_THROWS_AS(nn::adam_step(ps, gs, st), std::invalid_argument);
}

TEST_CASE("soft update: boundary taus and the cited step length") {
    nn::Tensor<float> target({2}, {0.0f, 0.0f});
    nn::Tensor<float> online({2}, {1.0f, -1.0f});
    nn::ParameterSet<float> ts, os;
    ts.add("w", &target);
    os.add("w", &online);

    nn::soft_update(ts, os, 1e-4);
    CHECK(target[0] == doctest::Approx(1e-4));
    CHECK(target[1] == doctest::Approx(-1e-4));

    nn::soft_update(ts, os, 1.0);
    CHECK(target[0] == 1.0f);

    target.data = {0.25f, 0.5f};
    nn::soft_update(ts, os, 0.0);
    CHECK(target[0] == 0.25f);
    CHECK(target[1] == 0.5f);

    CHECK_THROWS_AS(nn::soft_update(ts, os, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(nn::soft_update(ts, os, 1.1), std::invalid_argument);
}

TEST_CASE("soft update converges monotonically in max norm") {
    nn::Rng rng(7);
    nn::Tensor<float> target({16}), online({16});
    for (auto& v : target.data) v = static_cast<float>(rng.uniform(-2, 2));
    for (auto& v : online.data) v = static_cast<float>(rng.uniform(-2, 2));
    nn::ParameterSet<float> ts, os;
    ts.add("w", &target);
    os.add("w", &online);

    auto max_dist = [&]() {
        float m = 0.0f;
        for (size_t i = 0; i < target.size(); ++i) m = std::max(m, std::abs(target[i] - online[i]));
        return m;
    };
    float prev = max_dist();
    for (int step = 0; step < 200; ++step) {
        nn::soft_update(ts, os, 0.05);
        float d = max_dist();
        CHECK(d <= prev + 1e-7f);
        prev = d;
    }
    CHECK(prev < 0.01f);
}

TEST_CASE("parameter save/load round-trips bit-exactly") {
    nn::Rng rng(41);
    nn::Mlp<float> net = nn::Mlp<float>::dense_stack(4, {8, 3}, true);
    net.init(rng);
    nn::ParameterSet<float> ps;
    net.register_params(ps, "net.");

    std::string path = testsupport::scratch_path("roundtrip.ckpt");
    nn::save_checkpoint(path, "{\"test\":1}", ps);
    auto ck = nn::load_checkpoint(path);
    CHECK(ck.descriptor == "{\"test\":1}");
    REQUIRE(ck.tensors.size() == ps.size());
    for (size_t i = 0; i < ps.size(); ++i) {
        CHECK(ck.tensors[i].first == ps[i].name);
        REQUIRE(ck.tensors[i].second.shape == ps[i].tensor->shape);
        for (size_t j = 0; j < ps[i].tensor->size(); ++j) {
            CHECK(ck.tensors[i].second.data[j] == ps[i].tensor->data[j]);
        }
    }

    nn::Mlp<float> other = nn::Mlp<float>::dense_stack(4, {8, 3}, true);
    nn::ParameterSet<float> ops;
    other.register_params(ops, "net.");
    nn::apply_checkpoint(ck, ops);
    for (size_t i = 0; i < ps.size(); ++i) {
        for (size_t j = 0; j < ps[i].tensor->size(); ++j) {
            CHECK(ops[i].tensor->data[j] == ps[i].tensor->data[j]);
        }
    }
}

TEST_CASE("grad check: linear regression toy net is near machine precision") {
    // quadratic loss, so central differences are exact up to rounding
    nn::Rng rng(2);
    nn::Mlp<double> net = nn::Mlp<double>::dense_stack(3, {1}, true);
    net.init(rng);
    nn::Tensor<double> x({4, 3});
    std::vector<double> y(4);
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    for (auto& v : y) v = rng.uniform(-1, 1);

    auto loss_only = [&]() {
        auto out = net.forward(x);
        double l = 0.0;
        for (int r = 0; r < 4; ++r) l += (out.at(r, 0) - y[static_cast<size_t>(r)]) * (out.at(r, 0) - y[static_cast<size_t>(r)]);
        return l;
    };
    auto loss_grad = [&]() {
        net.zero_grad();
        auto out = net.forward(x);
        nn::Tensor<double> g({4, 1});
        double l = 0.0;
        for (int r = 0; r < 4; ++r) {
            double diff = out.at(r, 0) - y[static_cast<size_t>(r)];
            l += diff * diff;
            g.at(r, 0) = 2.0 * diff;
        }
        net.backward(g);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    net.register_params(ps, "net.");
    net.register_grads(gs, "net.");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only);
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("grad check: dead relu region has exactly zero gradients") {
    nn::Mlp<double> net = nn::Mlp<double>::dense_stack(2, {4, 1}, true);
    // negative biases and zero weights kill every hidden unit
    for (auto& v : net.layers[0].b.data) v = -1.0;

    nn::Tensor<double> x({1, 2}, {0.3, -0.4});
    net.zero_grad();
    auto out = net.forward(x);
    net.backward(nn::Tensor<double>({1, 1}, {1.0}));
    CHECK(out[0] == 0.0);
    nn::ParameterSet<double> gs;
    net.register_grads(gs, "net.");
    // everything upstream of the dead layer stays zero
    for (const auto& e : gs) {
        if (e.name.rfind("net.0", 0) == 0) {
            for (double v : e.tensor->data) CHECK(v == 0.0);
        }
    }
}
