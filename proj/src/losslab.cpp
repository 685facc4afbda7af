#include "legalrank/losslab.hpp"

#include <cmath>
#include <numeric>

#include "legalrank/errors.hpp"
#include "legalrank/rng.hpp"

namespace legalrank::losslab {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw ParameterError(std::string(what) + " contains non-finite entries");
    }
}

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

LossReport mnrl_loss(const Eigen::MatrixXd& sim, double scale) {
    if (sim.rows() != sim.cols()) {
        throw ParameterError("mnrl_loss: similarity matrix must be square, got " +
                             std::to_string(sim.rows()) + "x" + std::to_string(sim.cols()));
    }
    if (sim.rows() < 1) {
        throw ParameterError("mnrl_loss: batch must hold at least one pair");
    }
    if (!(scale > 0.0)) {
        throw ParameterError("mnrl_loss: scale must be positive");
    }
    require_finite(sim, "mnrl_loss: similarity matrix");

    const Eigen::Index batch = sim.rows();
    const Eigen::MatrixXd logits = scale * sim;
    LossReport report;
    report.gradient.resize(batch, batch);
    double total = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        Eigen::Index arg = 0;
        const double top = logits.row(i).maxCoeff(&arg);
        // log-sum-exp = top + log1p(sum of the other exp terms)
        double rest = 0.0;
        for (Eigen::Index j = 0; j < batch; ++j) {
            if (j != arg) {
                rest += std::exp(logits(i, j) - top);
            }
        }
        const double lse = top + std::log1p(rest);
        total += (top - logits(i, i)) + std::log1p(rest);
        for (Eigen::Index j = 0; j < batch; ++j) {
            const double p = std::exp(logits(i, j) - lse);
            report.gradient(i, j) = scale * (p - (i == j ? 1.0 : 0.0)) / static_cast<double>(batch);
        }
    }
    report.loss = total / static_cast<double>(batch);
    return report;
}

LossReport bce_with_logits(const Eigen::VectorXd& logits, const Eigen::VectorXd& labels) {
    if (logits.size() != labels.size()) {
        throw ParameterError("bce_with_logits: " + std::to_string(logits.size()) + " logits but " +
                             std::to_string(labels.size()) + " labels");
    }
    if (logits.size() == 0) {
        throw ParameterError("bce_with_logits: empty input");
    }
    require_finite(logits, "bce_with_logits: logits");
    const auto n = static_cast<double>(logits.size());
    LossReport report;
    report.gradient.resize(logits.size(), 1);
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double x = logits(i);
        const double y = labels(i);
        if (y != 0.0 && y != 1.0) {
            throw ParameterError("bce_with_logits: label " + std::to_string(y) + " is not 0 or 1");
        }
        total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
        report.gradient(i, 0) = (sigmoid(x) - y) / n;
    }
    report.loss = total / n;
    return report;
}

LossReport cosine_mse_loss(const Eigen::VectorXd& sims, const Eigen::VectorXd& targets) {
    if (sims.size() != targets.size()) {
        throw ParameterError("cosine_mse_loss: " + std::to_string(sims.size()) + " similarities but " +
                             std::to_string(targets.size()) + " targets");
    }
    if (sims.size() == 0) {
        throw ParameterError("cosine_mse_loss: empty input");
    }
    require_finite(sims, "cosine_mse_loss: similarities");
    require_finite(targets, "cosine_mse_loss: targets");
    if ((sims.array().abs() > 1.0).any()) {
        throw ParameterError("cosine_mse_loss: similarities must lie in [-1, 1]");
    }
    const auto n = static_cast<double>(sims.size());
    const Eigen::VectorXd diff = sims - targets;
    LossReport report;
    report.loss = diff.squaredNorm() / n;
    report.gradient = 2.0 * diff / n;
    return report;
}

Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double eps) {
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + eps;
        const double up = f(probe);
        probe(i) = x(i) - eps;
        const double down = f(probe);
        probe(i) = x(i);
        grad(i) = (up - down) / (2.0 * eps);
    }
    return grad;
}

std::string_view to_string(LossKind kind) {
    return kind == LossKind::mnrl ? "mnrl" : "cosine_mse";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "mnrl") {
        return LossKind::mnrl;
    }
    if (name == "cosine_mse" || name == "cosine-mse") {
        return LossKind::cosine_mse;
    }
    throw ParameterError("unknown loss '" + std::string(name) + "' (expected mnrl or cosine_mse)");
}

// ---------------------------------------------------------------------------
// ToyEmbedder

ToyEmbedder::ToyEmbedder(std::map<std::string, std::size_t> vocabulary, Eigen::MatrixXd weights)
    : vocab_(std::move(vocabulary)), weights_(std::move(weights)) {
    if (static_cast<std::size_t>(weights_.rows()) != vocab_.size()) {
        throw ParameterError("toy embedder: weight rows do not match vocabulary size");
    }
}

Eigen::RowVectorXd ToyEmbedder::counts(std::span<const std::string> tokens) const {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vocab_.size()));
    for (const auto& tok : tokens) {
        if (auto it = vocab_.find(tok); it != vocab_.end()) {
            c(static_cast<Eigen::Index>(it->second)) += 1.0;
        }
    }
    return c;
}

Eigen::RowVectorXd ToyEmbedder::encode(std::span<const std::string> tokens) const {
    return counts(tokens) * weights_;
}

double ToyEmbedder::similarity(std::span<const std::string> a, std::span<const std::string> b) const {
    Eigen::RowVectorXd u = encode(a);
    Eigen::RowVectorXd v = encode(b);
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    return u.dot(v) / (nu * nv);
}

namespace {

struct Encoded {
    Eigen::MatrixXd counts;   // b x V
    Eigen::MatrixXd unit;     // b x d, zero rows for zero embeddings
    Eigen::VectorXd norms;    // b
};

Encoded encode_side(const ToyEmbedder& embedder, std::span<const TokenPair> batch, bool queries) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    Encoded e;
    e.counts.resize(b, static_cast<Eigen::Index>(embedder.vocabulary().size()));
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto& tokens = queries ? batch[static_cast<std::size_t>(i)].query
                                     : batch[static_cast<std::size_t>(i)].document;
        e.counts.row(i) = embedder.counts(tokens);
    }
    Eigen::MatrixXd raw = e.counts * embedder.weights();
    e.norms = raw.rowwise().norm();
    e.unit = raw;
    for (Eigen::Index i = 0; i < b; ++i) {
        if (e.norms(i) > 0.0) {
            e.unit.row(i) /= e.norms(i);
        } else {
            e.unit.row(i).setZero();
        }
    }
    return e;
}

// Backpropagates dL/d(unit rows) through the row normalization.
Eigen::MatrixXd through_normalization(const Eigen::MatrixXd& d_unit, const Encoded& e) {
    Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(d_unit.rows(), d_unit.cols());
    for (Eigen::Index i = 0; i < d_unit.rows(); ++i) {
        if (e.norms(i) > 0.0) {
            const double radial = d_unit.row(i).dot(e.unit.row(i));
            d_raw.row(i) = (d_unit.row(i) - radial * e.unit.row(i)) / e.norms(i);
        }
    }
    return d_raw;
}

}  // namespace

Eigen::MatrixXd similarity_matrix(const ToyEmbedder& embedder, std::span<const TokenPair> pairs) {
    Encoded q = encode_side(embedder, pairs, true);
    Encoded d = encode_side(embedder, pairs, false);
    return q.unit * d.unit.transpose();
}

LossReport batch_loss(const ToyEmbedder& embedder, std::span<const TokenPair> batch, LossKind kind, double scale) {
    if (batch.empty()) {
        throw ParameterError("batch_loss: empty batch");
    }
    Encoded q = encode_side(embedder, batch, true);
    Encoded d = encode_side(embedder, batch, false);
    const Eigen::MatrixXd sim = q.unit * d.unit.transpose();

    LossReport inner;
    Eigen::MatrixXd d_sim;
    if (kind == LossKind::mnrl) {
        inner = mnrl_loss(sim, scale);
        d_sim = inner.gradient;
    } else {
        const Eigen::VectorXd diag = sim.diagonal().cwiseMax(-1.0).cwiseMin(1.0);
        inner = cosine_mse_loss(diag, Eigen::VectorXd::Ones(diag.size()));
        d_sim = Eigen::MatrixXd::Zero(sim.rows(), sim.cols());
        d_sim.diagonal() = inner.gradient.col(0);
    }
    const Eigen::MatrixXd d_qunit = d_sim * d.unit;
    const Eigen::MatrixXd d_dunit = d_sim.transpose() * q.unit;
    LossReport report;
    report.loss = inner.loss;
    report.gradient = q.counts.transpose() * through_normalization(d_qunit, q) +
                      d.counts.transpose() * through_normalization(d_dunit, d);
    return report;
}

namespace {

EpochTrace make_trace(std::size_t epoch, double loss, const ToyEmbedder& embedder,
                      std::span<const TokenPair> pairs) {
    const Eigen::MatrixXd sim = similarity_matrix(embedder, pairs);
    const auto n = static_cast<double>(sim.rows());
    const double diag_sum = sim.diagonal().sum();
    const double off_sum = sim.sum() - diag_sum;
    EpochTrace t;
    t.epoch = epoch;
    t.loss = loss;
    t.diag_mean = diag_sum / n;
    t.offdiag_mean = sim.rows() > 1 ? off_sum / (n * (n - 1.0)) : 0.0;
    return t;
}

std::vector<TokenPair> gather(std::span<const TokenPair> pairs, std::span<const std::size_t> idx) {
    std::vector<TokenPair> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(pairs[i]);
    }
    return out;
}

}  // namespace

ToyTrainingResult toy_train(std::span<const TokenPair> pairs, LossKind kind, const ToyConfig& config) {
    if (pairs.empty()) {
        throw ParameterError("toy_train: no training pairs");
    }
    if (kind == LossKind::mnrl && pairs.size() < 2) {
        throw ParameterError("toy_train: mnrl needs at least 2 pairs for in-batch negatives");
    }
    if (config.batch_size < 1 || config.dim < 1 || !(config.learning_rate > 0.0)) {
        throw ParameterError("toy_train: batch size, dimension and learning rate must be positive");
    }
    if (kind == LossKind::mnrl && config.batch_size < 2) {
        throw ParameterError("toy_train: mnrl needs a batch size of at least 2");
    }

    std::map<std::string, std::size_t> vocab;
    for (const auto& p : pairs) {
        for (const auto& t : p.query) {
            vocab.emplace(t, 0);
        }
        for (const auto& t : p.document) {
            vocab.emplace(t, 0);
        }
    }
    std::size_t next = 0;
    for (auto& [tok, id] : vocab) {
        id = next++;
    }

    SplitMix64 rng(config.seed);
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(config.dim));
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < weights.cols(); ++c) {
            weights(r, c) = config.init_std * rng.normal();
        }
    }
    ToyTrainingResult result{ToyEmbedder(std::move(vocab), std::move(weights)), {}};
    ToyEmbedder& model = result.embedder;

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    auto epoch_loss = [&](bool update, std::size_t epoch) {
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            std::size_t end = std::min(order.size(), begin + config.batch_size);
            if (kind == LossKind::mnrl && end - begin < 2) {
                continue;  // a lone trailing pair has no in-batch negative
            }
            auto batch = gather(pairs, std::span<const std::size_t>(order).subspan(begin, end - begin));
            LossReport r = batch_loss(model, batch, kind, config.scale);
            if (!std::isfinite(r.loss) || !r.gradient.allFinite()) {
                throw TrainingError("toy_train diverged (non-finite loss) in epoch " + std::to_string(epoch),
                                    epoch);
            }
            if (update) {
                model.weights() -= config.learning_rate * r.gradient;
            }
            sum += r.loss;
            ++batches;
        }
        return batches ? sum / static_cast<double>(batches) : 0.0;
    };

    result.trace.push_back(make_trace(0, epoch_loss(false, 0), model, pairs));
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        const double loss = epoch_loss(true, epoch);
        if (!model.weights().allFinite()) {
            throw TrainingError("toy_train diverged (non-finite weights) in epoch " + std::to_string(epoch), epoch);
        }
        result.trace.push_back(make_trace(epoch, loss, model, pairs));
    }
    return result;
}

std::vector<TokenPair> demo_pairs() {
    // topic shared by question and answer, then one word specific to each side
    static const char* const kTopics[8][3] = {
        {"thuế", "mức_thuế", "biểu_thuế"},
        {"đất_đai", "thủ_tục", "cấp_giấy"},
        {"hôn_nhân", "điều_kiện", "kết_hôn"},
        {"lao_động", "thời_hạn", "hợp_đồng"},
        {"giao_thông", "xử_phạt", "biển_báo"},
        {"doanh_nghiệp", "hồ_sơ", "đăng_ký"},
        {"hình_sự", "trách_nhiệm", "tội_danh"},
        {"bảo_hiểm", "quyền_lợi", "mức_đóng"},
    };
    std::vector<TokenPair> pairs;
    for (const auto& t : kTopics) {
        TokenPair p;
        p.query = {"theo", "quy_định", "pháp_luật", t[0], t[1]};
        p.document = {"điều", "luật", "quy_định", "pháp_luật", t[0], t[2]};
        pairs.push_back(std::move(p));
    }
    return pairs;
}

ToyConfig demo_config() {
    ToyConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.seed = 42;
    cfg.dim = 16;
    cfg.scale = 20.0;
    cfg.init_std = 0.1;
    return cfg;
}

}  // namespace legalrank::losslab
