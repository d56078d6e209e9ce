#include "embedlab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "embedlab/errors.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {

namespace {

MatrixXdRM apply_input_shift(const SaeModel& model, const MatrixXdRM& x) {
    MatrixXdRM shifted = x;
    if (model.center.size() > 0) shifted.rowwise() -= model.center.transpose();
    if (model.bias.size() > 0) shifted.rowwise() -= model.bias.transpose();
    return shifted;
}

}  // namespace

MatrixXdRM sae_encode(const SaeModel& model, const MatrixXdRM& x) {
    if (x.cols() != model.w_enc.rows())
        throw ShapeError("input dim " + std::to_string(x.cols()) + " != model dim " +
                         std::to_string(model.w_enc.rows()));
    return (apply_input_shift(model, x) * model.w_enc).cwiseMax(0.0);
}

MatrixXdRM sae_encode(const SaeModel& model, const EmbeddingMatrix& x) {
    return sae_encode(model, MatrixXdRM(x.as_double()));
}

MatrixXdRM sae_decode(const SaeModel& model, const MatrixXdRM& a) {
    if (a.cols() != model.w_dec.rows())
        throw ShapeError("latent dim " + std::to_string(a.cols()) + " != model latent dim " +
                         std::to_string(model.w_dec.rows()));
    MatrixXdRM r = a * model.w_dec;
    if (model.bias.size() > 0) r.rowwise() += model.bias.transpose();
    if (model.center.size() > 0) r.rowwise() += model.center.transpose();
    return r;
}

MatrixXdRM sae_reconstruct(const SaeModel& model, const MatrixXdRM& x) {
    return sae_decode(model, sae_encode(model, x));
}

SaeLossGrad sae_loss_grad(const SaeModel& model, const MatrixXdRM& x_batch) {
    if (x_batch.rows() == 0)
        throw DataError("empty batch");
    if (x_batch.cols() != model.w_enc.rows())
        throw ShapeError("batch dim mismatch");

    const double inv_b = 1.0 / static_cast<double>(x_batch.rows());
    MatrixXdRM xc = x_batch;
    if (model.center.size() > 0) xc.rowwise() -= model.center.transpose();
    MatrixXdRM xs = xc;
    if (model.bias.size() > 0) xs.rowwise() -= model.bias.transpose();

    const MatrixXdRM pre = xs * model.w_enc;
    const MatrixXdRM mask = (pre.array() > 0.0).cast<double>();
    const MatrixXdRM a = pre.cwiseProduct(mask);
    MatrixXdRM err = a * model.w_dec;  // reconstruction in centered coords
    if (model.bias.size() > 0) err.rowwise() += model.bias.transpose();
    err -= xc;

    SaeLossGrad out;
    out.loss = (err.squaredNorm() + model.lambda * a.sum()) * inv_b;

    // dL/da = 2 e W_D^T + lambda on active units
    MatrixXdRM da = 2.0 * (err * model.w_dec.transpose());
    da.array() += model.lambda;
    da = da.cwiseProduct(mask);

    out.grad_enc = (xs.transpose() * da) * inv_b;
    out.grad_dec = (a.transpose() * (2.0 * err)) * inv_b;
    if (model.bias.size() > 0)
        out.grad_bias =
            inv_b * (2.0 * err.colwise().sum() - (da * model.w_enc.transpose()).colwise().sum())
                       .transpose();
    return out;
}

SaeTrainResult sae_train(const EmbeddingMatrix& data, const SaeTrainConfig& cfg) {
    if (cfg.expansion < 1)
        throw RangeError("expansion must be >= 1");
    if (cfg.lambda < 0.0)
        throw RangeError("lambda must be >= 0");
    if (data.rows == 0)
        throw DataError("no training rows");
    const std::size_t n = data.rows;
    const std::size_t d = data.dim;
    const std::size_t m = cfg.expansion * d;
    const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, n));

    SaeModel model;
    model.lambda = cfg.lambda;
    model.expansion = cfg.expansion;
    model.seed = cfg.seed;

    // symmetric init: W_E uniform in +/- 1/sqrt(d), W_D = W_E^T
    Rng init_rng = Rng::fork(cfg.seed, 0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    model.w_enc.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < model.w_enc.rows(); ++i)
        for (Eigen::Index j = 0; j < model.w_enc.cols(); ++j)
            model.w_enc(i, j) = init_rng.next_uniform(-scale, scale);
    model.w_dec = model.w_enc.transpose();

    MatrixXdRM x = data.as_double();
    if (cfg.center) {
        model.center = x.colwise().mean().transpose();
    }
    if (cfg.use_bias) model.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));

    // Adam state
    MatrixXdRM m_enc = MatrixXdRM::Zero(model.w_enc.rows(), model.w_enc.cols());
    MatrixXdRM v_enc = m_enc;
    MatrixXdRM m_dec = MatrixXdRM::Zero(model.w_dec.rows(), model.w_dec.cols());
    MatrixXdRM v_dec = m_dec;
    Eigen::VectorXd m_bias, v_bias;
    if (cfg.use_bias) {
        m_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        v_bias = m_bias;
    }

    SaeTrainResult result;
    result.epoch_loss.reserve(cfg.epochs);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::fork(cfg.seed, 1 + epoch);
        const auto perm = shuffle_rng.permutation(n);

        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t b = std::min(batch, n - start);
            MatrixXdRM xb(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d));
            for (std::size_t r = 0; r < b; ++r)
                xb.row(static_cast<Eigen::Index>(r)) =
                    x.row(static_cast<Eigen::Index>(perm[start + r]));

            const SaeLossGrad lg = sae_loss_grad(model, xb);
            if (!std::isfinite(lg.loss))
                throw TrainingDiverged("NaN loss at epoch " + std::to_string(epoch));
            epoch_loss_sum += lg.loss * static_cast<double>(b);

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto adam_update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
                mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * grad;
                vel = cfg.beta2 * vel.array().matrix() +
                      (1.0 - cfg.beta2) * grad.array().square().matrix();
                param.array() -= cfg.learning_rate * (mom.array() / bc1) /
                                 ((vel.array() / bc2).sqrt() + cfg.adam_eps);
            };
            adam_update(model.w_enc, m_enc, v_enc, lg.grad_enc);
            adam_update(model.w_dec, m_dec, v_dec, lg.grad_dec);
            if (cfg.use_bias) adam_update(model.bias, m_bias, v_bias, lg.grad_bias);
        }
        result.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(n));
    }

    if (!result.epoch_loss.empty()) {
        const double best = *std::min_element(result.epoch_loss.begin(), result.epoch_loss.end());
        const double last = result.epoch_loss.back();
        if (last > 1.05 * best + 1e-12)
            throw TrainingDiverged("final epoch loss " + std::to_string(last) +
                                   " exceeds 1.05x best " + std::to_string(best));
    }
    result.model = std::move(model);
    return result;
}

namespace {

constexpr char kSaeMagic[8] = {'D', 'F', 'M', 'Z', 'S', 'A', 'E', '1'};

void write_matrix_f32(std::ostream& os, const MatrixXdRM& m) {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) buf[k++] = static_cast<float>(m(i, j));
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

MatrixXdRM read_matrix_f32(std::istream& is, std::size_t rows, std::size_t cols) {
    std::vector<float> buf(rows * cols);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(is.gcount()) != buf.size() * sizeof(float))
        throw FormatError("truncated SAE weights");
    MatrixXdRM m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(buf[k++]);
    return m;
}

}  // namespace

void save_sae(const SaeModel& model, const std::string& path) {
    nlohmann::json header;
    header["d"] = model.input_dim();
    header["m"] = model.latent_dim();
    header["lambda"] = model.lambda;
    header["expansion"] = model.expansion;
    header["seed"] = model.seed;
    header["has_bias"] = model.bias.size() > 0;
    header["has_center"] = model.center.size() > 0;
    const std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os.write(kSaeMagic, sizeof(kSaeMagic));
    const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
    os.write(reinterpret_cast<const char*>(lb), 4);
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_matrix_f32(os, model.w_enc);
    write_matrix_f32(os, model.w_dec);
    if (model.bias.size() > 0) write_matrix_f32(os, model.bias.transpose());
    if (model.center.size() > 0) write_matrix_f32(os, model.center.transpose());
    if (!os)
        throw DataError("short write: " + path);
}

SaeModel load_sae(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw FileNotFound(path);
    std::ifstream is(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    if (is.gcount() != 8 || std::memcmp(magic, kSaeMagic, 8) != 0)
        throw FormatError("bad SAE magic in " + path);
    unsigned char lb[4];
    is.read(reinterpret_cast<char*>(lb), 4);
    if (!is)
        throw FormatError("truncated SAE header");
    const std::uint32_t len = static_cast<std::uint32_t>(lb[0]) |
                              (static_cast<std::uint32_t>(lb[1]) << 8) |
                              (static_cast<std::uint32_t>(lb[2]) << 16) |
                              (static_cast<std::uint32_t>(lb[3]) << 24);
    std::string hs(len, '\0');
    is.read(hs.data(), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len)
        throw FormatError("truncated SAE header JSON");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad SAE header JSON: ") + e.what());
    }

    SaeModel model;
    const auto d = header.at("d").get<std::size_t>();
    const auto m = header.at("m").get<std::size_t>();
    model.lambda = header.at("lambda").get<double>();
    model.expansion = header.at("expansion").get<std::size_t>();
    model.seed = header.at("seed").get<std::uint64_t>();
    model.w_enc = read_matrix_f32(is, d, m);
    model.w_dec = read_matrix_f32(is, m, d);
    if (header.value("has_bias", false))
        model.bias = read_matrix_f32(is, 1, d).row(0).transpose();
    if (header.value("has_center", false))
        model.center = read_matrix_f32(is, 1, d).row(0).transpose();
    return model;
}

}  // namespace embedlab
