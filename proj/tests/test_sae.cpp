#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "embedlab/sae.hpp"
#include "embedlab/rng.hpp"
#include "test_util.hpp"

using namespace embedlab;
using testutil::max_rel_err;
using testutil::numerical_gradient;
using testutil::random_dmatrix;

namespace {

SaeModel small_model(std::size_t d, std::size_t m, std::uint64_t seed, double lambda = 0.0) {
    SaeModel model;
    model.lambda = lambda;
    model.expansion = m / d;
    model.seed = seed;
    model.w_enc = random_dmatrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m), seed);
    model.w_dec = random_dmatrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d), seed + 1);
    return model;
}

// rows in the span of two fixed directions; one_sided restricts the
// coefficients to the positive quadrant (a cone inside the subspace), which
// lets L1 pressure kill latents for good instead of just shrinking them
EmbeddingMatrix rank2_data(std::size_t n, std::size_t d, std::uint64_t seed,
                           bool one_sided = false) {
    Rng rng(seed);
    Eigen::RowVectorXd b1(static_cast<Eigen::Index>(d)), b2(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < b1.size(); ++j) {
        b1(j) = rng.next_normal();
        b2(j) = rng.next_normal();
    }
    b1.normalize();
    b2 -= b2.dot(b1) * b1;
    b2.normalize();
    EmbeddingMatrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double a = rng.next_normal();
        double b = rng.next_normal();
        if (one_sided) {
            a = std::abs(a);
            b = std::abs(b);
        }
        for (std::size_t j = 0; j < d; ++j)
            x.row(i)[j] = static_cast<float>(a * b1(static_cast<Eigen::Index>(j)) +
                                             b * b2(static_cast<Eigen::Index>(j)));
    }
    return x;
}

}  // namespace

TEST_CASE("encode clamps at zero") {
    auto model = small_model(3, 6, 5);
    SUBCASE("zero input gives zero activations") {
        const MatrixXdRM x = MatrixXdRM::Zero(2, 3);
        CHECK(sae_encode(model, x).isZero(0.0));
    }
    SUBCASE("negative preactivations clamp to zero") {
        // identity-extended encoder: first 3 latents copy the input
        model.w_enc.setZero();
        for (int j = 0; j < 3; ++j) model.w_enc(j, j) = 1.0;
        MatrixXdRM x(1, 3);
        x << -2.0, 3.0, -0.5;
        const auto a = sae_encode(model, x);
        CHECK(a(0, 0) == 0.0);
        CHECK(a(0, 1) == 3.0);
        CHECK(a(0, 2) == 0.0);
    }
    SUBCASE("activations always nonnegative") {
        const auto a = sae_encode(model, random_dmatrix(10, 3, 77));
        CHECK((a.array() >= 0.0).all());
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(sae_encode(model, random_dmatrix(2, 4, 1)), ShapeError);
    }
}

TEST_CASE("decode is a plain matrix product") {
    const auto model = small_model(4, 8, 6);
    SUBCASE("zero latents reconstruct to zero (no biases)") {
        CHECK(sae_decode(model, MatrixXdRM::Zero(3, 8)).isZero(0.0));
    }
    SUBCASE("one-hot latent selects a decoder row") {
        MatrixXdRM a = MatrixXdRM::Zero(1, 8);
        a(0, 5) = 1.0;
        const auto r = sae_decode(model, a);
        for (int j = 0; j < 4; ++j) CHECK(r(0, j) == model.w_dec(5, j));
    }
    SUBCASE("random latents equal a naive triple-loop product") {
        const auto a = random_dmatrix(5, 8, 31);
        const auto fast = sae_decode(model, a);
        for (Eigen::Index i = 0; i < 5; ++i)
            for (Eigen::Index j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (Eigen::Index k = 0; k < 8; ++k) acc += a(i, k) * model.w_dec(k, j);
                CHECK(fast(i, j) == doctest::Approx(acc).epsilon(1e-12));
            }
    }
    SUBCASE("encode-then-decode equals the composite pipeline bitwise") {
        const auto x = random_dmatrix(6, 4, 32);
        const MatrixXdRM composite = sae_reconstruct(model, x);
        const MatrixXdRM manual = sae_decode(model, sae_encode(model, x));
        CHECK(composite == manual);
    }
}

TEST_CASE("loss gradient matches finite differences away from kinks") {
    int done = 0;
    for (int trial = 0; trial < 40 && done < 20; ++trial) {
        const std::size_t d = 4, m = 8;
        auto model = small_model(d, m, 2000 + static_cast<std::uint64_t>(trial), 1e-3);
        const auto x = random_dmatrix(3, static_cast<Eigen::Index>(d), 3000 + static_cast<std::uint64_t>(trial));
        // skip points with any activation near the ReLU kink
        const MatrixXdRM pre = x * model.w_enc;
        if ((pre.array().abs() < 1e-4).any()) continue;
        ++done;

        const auto lg = sae_loss_grad(model, x);
        const auto ne = static_cast<Eigen::Index>(d * m);
        Eigen::VectorXd analytic(2 * ne);
        for (Eigen::Index i = 0; i < model.w_enc.rows(); ++i)
            for (Eigen::Index j = 0; j < model.w_enc.cols(); ++j)
                analytic(i * model.w_enc.cols() + j) = lg.grad_enc(i, j);
        for (Eigen::Index i = 0; i < model.w_dec.rows(); ++i)
            for (Eigen::Index j = 0; j < model.w_dec.cols(); ++j)
                analytic(ne + i * model.w_dec.cols() + j) = lg.grad_dec(i, j);

        auto f = [&](const Eigen::VectorXd& p) {
            SaeModel pm = model;
            for (Eigen::Index i = 0; i < pm.w_enc.rows(); ++i)
                for (Eigen::Index j = 0; j < pm.w_enc.cols(); ++j)
                    pm.w_enc(i, j) = p(i * pm.w_enc.cols() + j);
            for (Eigen::Index i = 0; i < pm.w_dec.rows(); ++i)
                for (Eigen::Index j = 0; j < pm.w_dec.cols(); ++j)
                    pm.w_dec(i, j) = p(ne + i * pm.w_dec.cols() + j);
            return sae_loss_grad(pm, x).loss;
        };
        Eigen::VectorXd x0(2 * ne);
        for (Eigen::Index i = 0; i < model.w_enc.rows(); ++i)
            for (Eigen::Index j = 0; j < model.w_enc.cols(); ++j)
                x0(i * model.w_enc.cols() + j) = model.w_enc(i, j);
        for (Eigen::Index i = 0; i < model.w_dec.rows(); ++i)
            for (Eigen::Index j = 0; j < model.w_dec.cols(); ++j)
                x0(ne + i * model.w_dec.cols() + j) = model.w_dec(i, j);

        const auto numeric = numerical_gradient(f, x0, 1e-6);
        CHECK(max_rel_err(analytic, numeric) < 1e-5);
    }
    CHECK(done == 20);
}

TEST_CASE("lambda zero reduces to the plain reconstruction gradient") {
    auto model = small_model(4, 8, 9, 0.0);
    const auto x = random_dmatrix(5, 4, 10);
    const auto lg0 = sae_loss_grad(model, x);
    model.lambda = 1e-2;
    const auto lg1 = sae_loss_grad(model, x);
    // the two differ exactly by the sparsity term
    const MatrixXdRM a = sae_encode(model, x);
    CHECK(lg1.loss - lg0.loss ==
          doctest::Approx(1e-2 * a.sum() / static_cast<double>(x.rows())).epsilon(1e-10));
}

TEST_CASE("perfect autoencoder has near-zero reconstruction gradient") {
    // d = m with identity weights reconstructs nonnegative inputs exactly
    SaeModel model;
    model.lambda = 0.0;
    model.expansion = 1;
    model.w_enc = MatrixXdRM::Identity(4, 4);
    model.w_dec = MatrixXdRM::Identity(4, 4);
    MatrixXdRM x = random_dmatrix(6, 4, 11).array().abs() + 0.1;
    const auto lg = sae_loss_grad(model, x);
    CHECK(lg.loss == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(lg.grad_enc.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lg.grad_dec.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("training recovers a rank-2 subspace") {
    const auto data = rank2_data(4000, 8, 42);
    SaeTrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.expansion = 8;
    cfg.learning_rate = 2e-3;
    cfg.batch_size = 256;
    cfg.epochs = 40;
    cfg.seed = 1;
    const auto result = sae_train(data, cfg);
    // subspace projection oracle: error 0 is attainable, so demand < 1e-3
    const MatrixXdRM x = data.as_double();
    const MatrixXdRM recon = sae_reconstruct(result.model, x);
    const double mse = (recon - x).squaredNorm() / static_cast<double>(x.rows());
    CHECK(mse < 1e-3);
    CHECK(result.epoch_loss.size() == 40);
}

TEST_CASE("default config carries the published hyperparameters") {
    const SaeTrainConfig cfg;
    CHECK(cfg.lambda == 3e-5);
    CHECK(cfg.expansion == 8);
    CHECK(cfg.learning_rate == 5e-4);
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.batch_size == 4096);
}

TEST_CASE("sparsity is nondecreasing in lambda") {
    const auto data = rank2_data(1500, 8, 77, /*one_sided=*/true);
    double prev_zero_fraction = -1.0;
    for (const double lambda : {0.0, 1e-4, 1e-2}) {
        SaeTrainConfig cfg;
        cfg.lambda = lambda;
        cfg.expansion = 8;
        cfg.learning_rate = 2e-3;
        cfg.batch_size = 256;
        cfg.epochs = 25;
        cfg.seed = 5;
        const auto result = sae_train(data, cfg);
        const MatrixXdRM a = sae_encode(result.model, data.as_double());
        const double zero_fraction =
            (a.array() == 0.0).cast<double>().sum() / static_cast<double>(a.size());
        CHECK(zero_fraction >= prev_zero_fraction);
        prev_zero_fraction = zero_fraction;
    }
}

TEST_CASE("training is deterministic per seed") {
    const auto data = rank2_data(600, 6, 3);
    SaeTrainConfig cfg;
    cfg.expansion = 4;
    cfg.epochs = 8;
    cfg.batch_size = 128;
    cfg.seed = 11;
    const auto a = sae_train(data, cfg);
    const auto b = sae_train(data, cfg);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.model.w_enc == b.model.w_enc);
    cfg.seed = 12;
    const auto c = sae_train(data, cfg);
    CHECK(a.epoch_loss != c.epoch_loss);
}

TEST_CASE("divergent training is reported with the failing configuration") {
    const auto data = rank2_data(400, 6, 13);
    SaeTrainConfig cfg;
    cfg.expansion = 4;
    cfg.learning_rate = 1e6;  // guaranteed blow-up
    cfg.batch_size = 64;
    cfg.epochs = 5;
    CHECK_THROWS_AS(sae_train(data, cfg), TrainingDiverged);
}

TEST_CASE("model file round trip") {
    testutil::TempDir tmp("sae-io");
    const auto data = rank2_data(300, 6, 8);
    SaeTrainConfig cfg;
    cfg.expansion = 2;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    const auto trained = sae_train(data, cfg);
    save_sae(trained.model, tmp.file("model.sae"));
    const auto loaded = load_sae(tmp.file("model.sae"));
    CHECK(loaded.input_dim() == 6);
    CHECK(loaded.latent_dim() == 12);
    CHECK(loaded.lambda == trained.model.lambda);
    CHECK(loaded.expansion == trained.model.expansion);
    // float32 payload: equality after the same quantization
    for (Eigen::Index i = 0; i < loaded.w_enc.rows(); ++i)
        for (Eigen::Index j = 0; j < loaded.w_enc.cols(); ++j)
            CHECK(loaded.w_enc(i, j) ==
                  static_cast<double>(static_cast<float>(trained.model.w_enc(i, j))));
    CHECK_THROWS_AS(load_sae(tmp.file("missing.sae")), FileNotFound);
}

TEST_CASE("learned pre-encoder bias helps shifted data") {
    // rank-2 data pushed far from the origin is hard without a bias
    auto data = rank2_data(1200, 6, 21);
    for (auto& v : data.data) v += 5.0f;
    SaeTrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.expansion = 6;
    cfg.learning_rate = 2e-3;
    cfg.batch_size = 128;
    cfg.epochs = 30;
    cfg.use_bias = true;
    const auto with_bias = sae_train(data, cfg);
    const MatrixXdRM x = data.as_double();
    const double mse_bias =
        (sae_reconstruct(with_bias.model, x) - x).squaredNorm() / static_cast<double>(x.rows());
    CHECK(mse_bias < 0.05);
}
