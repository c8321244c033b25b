#include <doctest.h>

#include <cmath>

#include "vsal/adam.hpp"
#include "vsal/tensor.hpp"

using namespace vsal;

TEST_CASE("adam leaves parameters unchanged for zero gradient and zero decay") {
    TensorF p = TensorF::from_data({3}, {1.0f, -2.0f, 0.5f});
    p.set_requires_grad(true);
    p.mutable_grad();  // zeros
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    Adam<float> adam({p}, cfg);
    adam.step();
    CHECK(p.data()[0] == doctest::Approx(1.0));
    CHECK(p.data()[1] == doctest::Approx(-2.0));
    CHECK(p.data()[2] == doctest::Approx(0.5));
}

TEST_CASE("first adam step moves by about the learning rate") {
    // closed form: bias-corrected m/v give update lr * g/|g| on step 1
    TensorF p = TensorF::from_data({1}, {0.0f});
    p.set_requires_grad(true);
    p.mutable_grad()[0] = 3.0f;
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    Adam<float> adam({p}, cfg);
    adam.step();
    CHECK(p.data()[0] == doctest::Approx(-0.05).epsilon(1e-4));
    CHECK(adam.step_count() == 1);
    // gradients cleared afterwards
    CHECK(p.grad()[0] == 0.0f);
}

TEST_CASE("adam converges on the quadratic bowl") {
    // run-to-convergence oracle: f(x) = x^2, gradient 2x
    TensorF x = TensorF::from_data({1}, {5.0f});
    x.set_requires_grad(true);
    AdamConfig cfg;
    cfg.learning_rate = 1e-2;
    Adam<float> adam({x}, cfg);
    for (int i = 0; i < 2000; ++i) {
        x.mutable_grad()[0] = 2.0f * x.data()[0];
        adam.step();
    }
    CHECK(std::abs(x.data()[0]) < 1e-3);
}

TEST_CASE("adam requires gradients") {
    TensorF p = TensorF::from_data({2}, {1.0f, 2.0f});
    p.set_requires_grad(true);
    Adam<float> adam({p}, AdamConfig{});
    CHECK_THROWS_AS(adam.step(), UsageError);
}

TEST_CASE("decoupled weight decay shrinks weights even at zero gradient") {
    TensorF p = TensorF::from_data({1}, {2.0f});
    p.set_requires_grad(true);
    p.mutable_grad();
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.5;
    Adam<float> adam({p}, cfg);
    adam.step();
    CHECK(p.data()[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("moment buffers shape-match their parameters and step count increases") {
    TensorF a = TensorF::zeros({2, 3});
    TensorF b = TensorF::zeros({4});
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    a.mutable_grad();
    b.mutable_grad();
    Adam<float> adam({a, b}, AdamConfig{});
    CHECK(adam.first_moment(0).size() == 6);
    CHECK(adam.second_moment(1).size() == 4);
    adam.step();
    a.mutable_grad();
    b.mutable_grad();
    adam.step();
    CHECK(adam.step_count() == 2);
}
