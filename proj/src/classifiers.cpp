#include "nids/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nids {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// shared helpers

double solve_prior(const std::vector<int>& y) {
    double s = 0.0;
    for (int v : y) s += v;
    return s / static_cast<double>(y.size());
}

// Gaussian elimination with partial pivoting; A is overwritten.
std::vector<double> solve_linear(Matrix A, std::vector<double> b) {
    const std::size_t n = A.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(A.at(r, col)) > std::fabs(A.at(piv, col))) piv = r;
        }
        if (std::fabs(A.at(piv, col)) < 1e-14) {
            throw std::runtime_error("solve_linear: singular matrix");
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A.at(piv, c), A.at(col, c));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A.at(r, col) / A.at(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A.at(r, c) -= f * A.at(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= A.at(i, c) * x[c];
        x[i] = acc / A.at(i, i);
    }
    return x;
}

// ---------------------------------------------------------------------------
// decision tree

struct TreeNode {
    int feature = -1; // -1 => leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prob = 0.0; // malicious fraction at the leaf
};

json node_to_json(const std::vector<TreeNode>& nodes, int idx) {
    const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
    if (n.feature < 0) return {{"prob", n.prob}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_to_json(nodes, n.left)},
            {"right", node_to_json(nodes, n.right)}};
}

int node_from_json(const json& j, std::vector<TreeNode>& nodes) {
    TreeNode n;
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(n);
    if (j.contains("prob")) {
        nodes[static_cast<std::size_t>(idx)].prob = j.at("prob").get<double>();
        return idx;
    }
    nodes[static_cast<std::size_t>(idx)].feature = j.at("feature").get<int>();
    nodes[static_cast<std::size_t>(idx)].threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), nodes);
    const int r = node_from_json(j.at("right"), nodes);
    nodes[static_cast<std::size_t>(idx)].left = l;
    nodes[static_cast<std::size_t>(idx)].right = r;
    return idx;
}

struct TreeConfig {
    std::size_t max_depth = 12;
    std::size_t min_split = 2;
    std::size_t features_per_split = 0; // 0 => all features
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const std::vector<int>& y, const TreeConfig& cfg, RngStream* rng)
        : X_(X), y_(y), cfg_(cfg), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<std::size_t> idx) {
        nodes_.clear();
        build_node(std::move(idx), 0);
        return std::move(nodes_);
    }

private:
    int make_leaf(const std::vector<std::size_t>& idx) {
        double pos = 0.0;
        for (std::size_t i : idx) pos += y_[i];
        TreeNode n;
        n.prob = idx.empty() ? 0.0 : pos / static_cast<double>(idx.size());
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size() - 1);
    }

    static double gini(double pos, double n) {
        if (n <= 0.0) return 0.0;
        const double p = pos / n;
        return 2.0 * p * (1.0 - p);
    }

    int build_node(std::vector<std::size_t> idx, std::size_t depth) {
        double pos = 0.0;
        for (std::size_t i : idx) pos += y_[i];
        const double n = static_cast<double>(idx.size());
        const bool pure = (pos == 0.0 || pos == n);
        if (pure || depth >= cfg_.max_depth || idx.size() < cfg_.min_split) {
            return make_leaf(idx);
        }

        std::vector<std::size_t> features(X_.cols());
        std::iota(features.begin(), features.end(), 0);
        if (cfg_.features_per_split > 0 && cfg_.features_per_split < features.size()) {
            if (!rng_) throw std::logic_error("tree: feature subsampling requires an rng");
            rng_->shuffle(features);
            features.resize(cfg_.features_per_split);
            std::sort(features.begin(), features.end());
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = gini(pos, n);
        std::vector<std::pair<double, int>> vals;
        for (std::size_t f : features) {
            vals.clear();
            for (std::size_t i : idx) vals.emplace_back(X_.at(i, f), y_[i]);
            std::sort(vals.begin(), vals.end());
            double lpos = 0.0;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                lpos += vals[k].second;
                if (vals[k].first == vals[k + 1].first) continue;
                const double ln = static_cast<double>(k + 1);
                const double rn = n - ln;
                const double imp = (ln * gini(lpos, ln) + rn * gini(pos - lpos, rn)) / n;
                if (imp < best_impurity - 1e-12) {
                    best_impurity = imp;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (vals[k].first + vals[k + 1].first);
                }
            }
        }
        if (best_feature < 0) return make_leaf(idx);

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
            (X_.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
                .push_back(i);
        }
        if (left.empty() || right.empty()) return make_leaf(idx);

        TreeNode node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes_.push_back(node);
        const int self = static_cast<int>(nodes_.size() - 1);
        const int l = build_node(std::move(left), depth + 1);
        const int r = build_node(std::move(right), depth + 1);
        nodes_[static_cast<std::size_t>(self)].left = l;
        nodes_[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    const Matrix& X_;
    const std::vector<int>& y_;
    TreeConfig cfg_;
    RngStream* rng_;
    std::vector<TreeNode> nodes_;
};

double tree_predict(const std::vector<TreeNode>& nodes, std::span<const double> x) {
    int cur = 0;
    while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(cur)];
        cur = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(cur)].prob;
}

class DecisionTreeModel : public Model {
public:
    DecisionTreeModel(std::vector<TreeNode> nodes, std::size_t dim)
        : nodes_(std::move(nodes)), dim_(dim) {}

    Algorithm algorithm() const override { return Algorithm::DT; }
    std::size_t input_dim() const override { return dim_; }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        return tree_predict(nodes_, x);
    }
    json to_json() const override {
        return {{"algorithm", "DT"}, {"dim", dim_}, {"tree", node_to_json(nodes_, 0)}};
    }

    static std::shared_ptr<DecisionTreeModel> from_json(const json& j) {
        std::vector<TreeNode> nodes;
        node_from_json(j.at("tree"), nodes);
        return std::make_shared<DecisionTreeModel>(std::move(nodes),
                                                   j.at("dim").get<std::size_t>());
    }

private:
    std::vector<TreeNode> nodes_;
    std::size_t dim_;
};

// ---------------------------------------------------------------------------
// forests (RF and Bagging differ in per-split feature subsampling)

class ForestModel : public Model {
public:
    ForestModel(Algorithm alg, std::vector<std::vector<TreeNode>> trees, std::size_t dim)
        : alg_(alg), trees_(std::move(trees)), dim_(dim) {}

    Algorithm algorithm() const override { return alg_; }
    std::size_t input_dim() const override { return dim_; }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        double sum = 0.0;
        for (const auto& t : trees_) sum += tree_predict(t, x);
        return sum / static_cast<double>(trees_.size());
    }
    json to_json() const override {
        json jt = json::array();
        for (const auto& t : trees_) jt.push_back(node_to_json(t, 0));
        return {{"algorithm", algorithm_name(alg_)}, {"dim", dim_}, {"trees", jt}};
    }

    static std::shared_ptr<ForestModel> from_json(const json& j) {
        std::vector<std::vector<TreeNode>> trees;
        for (const auto& jt : j.at("trees")) {
            std::vector<TreeNode> nodes;
            node_from_json(jt, nodes);
            trees.push_back(std::move(nodes));
        }
        return std::make_shared<ForestModel>(
            algorithm_from_name(j.at("algorithm").get<std::string>()), std::move(trees),
            j.at("dim").get<std::size_t>());
    }

private:
    Algorithm alg_;
    std::vector<std::vector<TreeNode>> trees_;
    std::size_t dim_;
};

// ---------------------------------------------------------------------------
// gradient boosting (logistic loss, Newton-valued stumps)

struct Stump {
    int feature = -1;
    double threshold = 0.0;
    double left_value = 0.0;
    double right_value = 0.0; // for leaves: left_value holds the sole value

    double eval(std::span<const double> x) const {
        if (feature < 0) return left_value;
        return x[static_cast<std::size_t>(feature)] <= threshold ? left_value : right_value;
    }
};

class GradientBoostModel : public Model {
public:
    GradientBoostModel(double base_score, double learning_rate, std::vector<Stump> stumps,
                       std::size_t dim, std::vector<double> losses)
        : base_(base_score), lr_(learning_rate), stumps_(std::move(stumps)), dim_(dim),
          losses_(std::move(losses)) {}

    Algorithm algorithm() const override { return Algorithm::GB; }
    std::size_t input_dim() const override { return dim_; }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        double f = base_;
        for (const auto& s : stumps_) f += lr_ * s.eval(x);
        return sigmoid(f);
    }
    const std::vector<double>* loss_history() const override { return &losses_; }
    json to_json() const override {
        json js = json::array();
        for (const auto& s : stumps_) {
            js.push_back({{"feature", s.feature},
                          {"threshold", s.threshold},
                          {"left", s.left_value},
                          {"right", s.right_value}});
        }
        return {{"algorithm", "GB"},
                {"dim", dim_},
                {"base", base_},
                {"learning_rate", lr_},
                {"stumps", js}};
    }

    static std::shared_ptr<GradientBoostModel> from_json(const json& j) {
        std::vector<Stump> stumps;
        for (const auto& e : j.at("stumps")) {
            Stump s;
            s.feature = e.at("feature").get<int>();
            s.threshold = e.at("threshold").get<double>();
            s.left_value = e.at("left").get<double>();
            s.right_value = e.at("right").get<double>();
            stumps.push_back(s);
        }
        return std::make_shared<GradientBoostModel>(
            j.at("base").get<double>(), j.at("learning_rate").get<double>(), std::move(stumps),
            j.at("dim").get<std::size_t>(), std::vector<double>{});
    }

private:
    double base_;
    double lr_;
    std::vector<Stump> stumps_;
    std::size_t dim_;
    std::vector<double> losses_;
};

Stump fit_stump(const Matrix& X, const std::vector<double>& grad, const std::vector<double>& hess) {
    constexpr double kLambda = 1e-6;
    const std::size_t n = X.rows();
    double gsum = 0.0, hsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gsum += grad[i];
        hsum += hess[i];
    }
    Stump best;
    best.left_value = gsum / (hsum + kLambda);
    double best_gain = 0.0;

    std::vector<std::pair<double, std::size_t>> vals(n);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        for (std::size_t i = 0; i < n; ++i) vals[i] = {X.at(i, f), i};
        std::sort(vals.begin(), vals.end());
        double gl = 0.0, hl = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            gl += grad[vals[k].second];
            hl += hess[vals[k].second];
            if (vals[k].first == vals[k + 1].first) continue;
            const double gr = gsum - gl, hr = hsum - hl;
            const double gain = gl * gl / (hl + kLambda) + gr * gr / (hr + kLambda) -
                                gsum * gsum / (hsum + kLambda);
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (vals[k].first + vals[k + 1].first);
                best.left_value = gl / (hl + kLambda);
                best.right_value = gr / (hr + kLambda);
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// k-nearest neighbours

class KnnModel : public Model {
public:
    KnnModel(Matrix X, std::vector<int> y, std::size_t k)
        : X_(std::move(X)), y_(std::move(y)), k_(k) {}

    Algorithm algorithm() const override { return Algorithm::KNN; }
    std::size_t input_dim() const override { return X_.cols(); }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        const std::size_t k = std::min(k_, X_.rows());
        std::vector<std::pair<double, std::size_t>> dist(X_.rows());
        for (std::size_t i = 0; i < X_.rows(); ++i) {
            double d = 0.0;
            const auto row = X_.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double diff = row[j] - x[j];
                d += diff * diff;
            }
            dist[i] = {d, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        double pos = 0.0;
        for (std::size_t i = 0; i < k; ++i) pos += y_[dist[i].second];
        return pos / static_cast<double>(k);
    }
    json to_json() const override {
        return {{"algorithm", "KNN"},
                {"k", k_},
                {"rows", X_.rows()},
                {"cols", X_.cols()},
                {"features", X_.values()},
                {"labels", y_}};
    }

    static std::shared_ptr<KnnModel> from_json(const json& j) {
        Matrix X(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                 j.at("features").get<std::vector<double>>());
        return std::make_shared<KnnModel>(std::move(X), j.at("labels").get<std::vector<int>>(),
                                          j.at("k").get<std::size_t>());
    }

private:
    Matrix X_;
    std::vector<int> y_;
    std::size_t k_;
};

// ---------------------------------------------------------------------------
// linear discriminant analysis

class LdaModel : public Model {
public:
    LdaModel(std::vector<double> w, double bias) : w_(std::move(w)), bias_(bias) {}

    Algorithm algorithm() const override { return Algorithm::LDA; }
    std::size_t input_dim() const override { return w_.size(); }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        double z = bias_;
        for (std::size_t i = 0; i < w_.size(); ++i) z += w_[i] * x[i];
        return sigmoid(z);
    }
    json to_json() const override {
        return {{"algorithm", "LDA"}, {"w", w_}, {"bias", bias_}};
    }
    static std::shared_ptr<LdaModel> from_json(const json& j) {
        return std::make_shared<LdaModel>(j.at("w").get<std::vector<double>>(),
                                          j.at("bias").get<double>());
    }

private:
    std::vector<double> w_;
    double bias_;
};

std::shared_ptr<LdaModel> train_lda(const LabeledDataset& data) {
    const std::size_t d = data.dim();
    const std::size_t n = data.size();
    std::vector<std::size_t> counts(2, 0);
    std::vector<std::vector<double>> means(2, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const int c = data.labels[i];
        ++counts[static_cast<std::size_t>(c)];
        const auto row = data.features.row(i);
        for (std::size_t j = 0; j < d; ++j) means[static_cast<std::size_t>(c)][j] += row[j];
    }
    if (counts[0] == 0 || counts[1] == 0) {
        throw std::invalid_argument("LDA: both classes required (covariance undefined)");
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            means[static_cast<std::size_t>(c)][j] /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
    }
    Matrix cov(d, d);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = means[static_cast<std::size_t>(data.labels[i])];
        const auto row = data.features.row(i);
        for (std::size_t j = 0; j < d; ++j) diff[j] = row[j] - mu[j];
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) {
                cov.at(a, b) += diff[a] * diff[b];
            }
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            const double v = cov.at(a, b) / static_cast<double>(n - 2 > 0 ? n - 2 : 1);
            cov.at(a, b) = v;
            cov.at(b, a) = v;
        }
        cov.at(a, a) += 1e-6; // ridge for near-singular pooled covariance
    }
    std::vector<double> delta(d);
    for (std::size_t j = 0; j < d; ++j) delta[j] = means[1][j] - means[0][j];
    std::vector<double> w = solve_linear(cov, delta);
    double mid = 0.0;
    for (std::size_t j = 0; j < d; ++j) mid += w[j] * 0.5 * (means[0][j] + means[1][j]);
    const double prior1 = static_cast<double>(counts[1]) / static_cast<double>(n);
    const double bias = -mid + std::log(prior1 / (1.0 - prior1));
    return std::make_shared<LdaModel>(std::move(w), bias);
}

// ---------------------------------------------------------------------------
// logistic regression

class LogRegModel : public Model {
public:
    LogRegModel(std::vector<double> w, double bias, std::vector<double> losses)
        : w_(std::move(w)), bias_(bias), losses_(std::move(losses)) {}

    Algorithm algorithm() const override { return Algorithm::LR; }
    std::size_t input_dim() const override { return w_.size(); }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        double z = bias_;
        for (std::size_t i = 0; i < w_.size(); ++i) z += w_[i] * x[i];
        return sigmoid(z);
    }
    const std::vector<double>* loss_history() const override { return &losses_; }
    json to_json() const override {
        return {{"algorithm", "LR"}, {"w", w_}, {"bias", bias_}};
    }
    static std::shared_ptr<LogRegModel> from_json(const json& j) {
        return std::make_shared<LogRegModel>(j.at("w").get<std::vector<double>>(),
                                             j.at("bias").get<double>(), std::vector<double>{});
    }

private:
    std::vector<double> w_;
    double bias_;
    std::vector<double> losses_;
};

std::shared_ptr<LogRegModel> train_lr(const LabeledDataset& data, double lr, std::size_t epochs,
                                      double l2) {
    const std::size_t d = data.dim();
    const std::size_t n = data.size();
    std::vector<double> w(d, 0.0);
    double bias = 0.0;
    std::vector<double> losses;
    losses.reserve(epochs);
    std::vector<double> grad(d);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double gb = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = data.features.row(i);
            double z = bias;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * row[j];
            const double p = sigmoid(z);
            const double err = p - data.labels[i];
            for (std::size_t j = 0; j < d; ++j) grad[j] += err * row[j];
            gb += err;
            loss += bce_loss(data.labels[i], p);
        }
        double reg = 0.0;
        for (double v : w) reg += v * v;
        losses.push_back(loss / static_cast<double>(n) + 0.5 * l2 * reg);
        for (std::size_t j = 0; j < d; ++j) {
            w[j] -= lr * (grad[j] / static_cast<double>(n) + l2 * w[j]);
        }
        bias -= lr * gb / static_cast<double>(n);
    }
    return std::make_shared<LogRegModel>(std::move(w), bias, std::move(losses));
}

// ---------------------------------------------------------------------------
// MLP classifier wrapper

class MlpModel : public Model {
public:
    MlpModel(MlpNetwork net, std::vector<double> losses)
        : net_(std::move(net)), losses_(std::move(losses)) {}

    Algorithm algorithm() const override { return Algorithm::MLP; }
    std::size_t input_dim() const override { return net_.input_dim(); }
    double predict_proba(std::span<const double> x) const override {
        check_dim(x);
        return net_.forward(x)[0];
    }
    const std::vector<double>* loss_history() const override { return &losses_; }
    const MlpNetwork& network() const { return net_; }
    json to_json() const override {
        json jl = json::array();
        for (const auto& layer : net_.layers()) {
            jl.push_back({{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"act", layer.act == Activation::ReLU      ? "relu"
                                  : layer.act == Activation::Sigmoid ? "sigmoid"
                                                                     : "identity"},
                          {"weights", layer.weights.values()},
                          {"bias", layer.bias}});
        }
        return {{"algorithm", "MLP"}, {"layers", jl}};
    }

    static MlpNetwork network_from_json(const json& j) {
        MlpNetwork net;
        for (const auto& e : j.at("layers")) {
            MlpLayer layer;
            layer.weights = Matrix(e.at("out").get<std::size_t>(), e.at("in").get<std::size_t>(),
                                   e.at("weights").get<std::vector<double>>());
            layer.bias = e.at("bias").get<std::vector<double>>();
            const std::string act = e.at("act").get<std::string>();
            layer.act = act == "relu"      ? Activation::ReLU
                        : act == "sigmoid" ? Activation::Sigmoid
                                           : Activation::Identity;
            net.layers().push_back(std::move(layer));
        }
        return net;
    }

    static std::shared_ptr<MlpModel> from_json(const json& j) {
        return std::make_shared<MlpModel>(network_from_json(j), std::vector<double>{});
    }

private:
    MlpNetwork net_;
    std::vector<double> losses_;
};

std::shared_ptr<MlpModel> train_mlp(const LabeledDataset& data, const ClassifierSpec& spec,
                                    RngStream& rng) {
    const std::size_t d = data.dim();
    const std::size_t hidden = static_cast<std::size_t>(spec.get("hidden", 64));
    const std::size_t epochs = static_cast<std::size_t>(spec.get("epochs", 50));
    const std::size_t batch = static_cast<std::size_t>(spec.get("batch", 128));
    const double lr = spec.get("learning_rate", 1e-3);

    std::vector<std::size_t> dims{d, hidden, 1};
    const std::size_t hidden2 = static_cast<std::size_t>(spec.get("hidden2", 0));
    if (hidden2 > 0) dims.insert(dims.end() - 1, hidden2);

    MlpNetwork net = MlpNetwork::create(dims, Activation::ReLU, Activation::Sigmoid, rng);
    std::vector<double> losses;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    MlpNetwork::Trace trace;
    for (std::size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            MlpGradients acc = net.zero_gradients();
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double p = net.forward(data.features.row(i), trace)[0];
                const double y = data.labels[i];
                epoch_loss += bce_loss(y, p);
                const std::vector<double> delta{p - y};
                net.accumulate(acc, net.backward(trace, delta));
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& m : acc.dw)
                for (double& v : m.values()) v *= scale;
            for (auto& b : acc.db)
                for (double& v : b) v *= scale;
            net.apply_update(acc, lr);
        }
        losses.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return std::make_shared<MlpModel>(std::move(net), std::move(losses));
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, RngStream& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
    return idx;
}

} // namespace

// ---------------------------------------------------------------------------

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::DT: return "DT";
        case Algorithm::RF: return "RF";
        case Algorithm::Bagging: return "BGG";
        case Algorithm::GB: return "GB";
        case Algorithm::KNN: return "KNN";
        case Algorithm::LDA: return "LDA";
        case Algorithm::LR: return "LR";
        case Algorithm::MLP: return "MLP";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "DT") return Algorithm::DT;
    if (name == "RF") return Algorithm::RF;
    if (name == "BGG" || name == "Bagging") return Algorithm::Bagging;
    if (name == "GB") return Algorithm::GB;
    if (name == "KNN") return Algorithm::KNN;
    if (name == "LDA") return Algorithm::LDA;
    if (name == "LR") return Algorithm::LR;
    if (name == "MLP") return Algorithm::MLP;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

ClassifierSpec ClassifierSpec::defaults(Algorithm a) {
    ClassifierSpec s;
    s.algorithm = a;
    switch (a) {
        case Algorithm::DT:
            s.params = {{"max_depth", 12}};
            break;
        case Algorithm::RF:
            s.params = {{"trees", 100}, {"max_depth", 12}, {"bootstrap", 1}};
            break;
        case Algorithm::Bagging:
            s.params = {{"trees", 10}, {"max_depth", 12}, {"bootstrap", 1}};
            break;
        case Algorithm::GB:
            s.params = {{"stumps", 100}, {"learning_rate", 0.1}};
            break;
        case Algorithm::KNN:
            s.params = {{"k", 5}};
            break;
        case Algorithm::LDA:
            break;
        case Algorithm::LR:
            s.params = {{"learning_rate", 0.1}, {"epochs", 500}, {"l2", 1e-4}};
            break;
        case Algorithm::MLP:
            s.params = {{"hidden", 64}, {"learning_rate", 1e-3}, {"epochs", 50}, {"batch", 128}};
            break;
    }
    return s;
}

double ClassifierSpec::get(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

ClassifierSpec ClassifierSpec::with(const std::string& name, double value) const {
    ClassifierSpec out = *this;
    out.params[name] = value;
    return out;
}

void Model::check_dim(std::span<const double> x) const {
    if (x.size() != input_dim()) {
        throw std::invalid_argument(algorithm_name(algorithm()) + ": input dimension " +
                                    std::to_string(x.size()) + " != " +
                                    std::to_string(input_dim()));
    }
}

ModelPtr train_classifier(const ClassifierSpec& spec, const LabeledDataset& data, RngStream& rng) {
    if (data.size() == 0) throw std::invalid_argument("train_classifier: empty dataset");
    const std::size_t n = data.size();
    const std::size_t d = data.dim();

    switch (spec.algorithm) {
        case Algorithm::DT: {
            TreeConfig cfg;
            cfg.max_depth = static_cast<std::size_t>(spec.get("max_depth", 12));
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            TreeBuilder b(data.features, data.labels, cfg, nullptr);
            return std::make_shared<DecisionTreeModel>(b.build(std::move(idx)), d);
        }
        case Algorithm::RF:
        case Algorithm::Bagging: {
            TreeConfig cfg;
            cfg.max_depth = static_cast<std::size_t>(spec.get("max_depth", 12));
            if (spec.algorithm == Algorithm::RF) {
                const double def = std::max(1.0, std::floor(std::sqrt(static_cast<double>(d))));
                cfg.features_per_split = static_cast<std::size_t>(spec.get("features_per_split", def));
            }
            const std::size_t trees =
                static_cast<std::size_t>(spec.get("trees", spec.algorithm == Algorithm::RF ? 100 : 10));
            const bool bootstrap = spec.get("bootstrap", 1) != 0;
            std::vector<std::vector<TreeNode>> forest;
            for (std::size_t t = 0; t < trees; ++t) {
                RngStream tree_rng = rng.child(t);
                std::vector<std::size_t> idx;
                if (bootstrap) {
                    idx = bootstrap_indices(n, tree_rng);
                } else {
                    idx.resize(n);
                    std::iota(idx.begin(), idx.end(), 0);
                }
                TreeBuilder b(data.features, data.labels, cfg,
                              cfg.features_per_split > 0 ? &tree_rng : nullptr);
                forest.push_back(b.build(std::move(idx)));
            }
            return std::make_shared<ForestModel>(spec.algorithm, std::move(forest), d);
        }
        case Algorithm::GB: {
            const std::size_t rounds = static_cast<std::size_t>(spec.get("stumps", 100));
            const double lr = spec.get("learning_rate", 0.1);
            const double prior = std::clamp(solve_prior(data.labels), 1e-6, 1.0 - 1e-6);
            const double base = std::log(prior / (1.0 - prior));
            std::vector<double> f(n, base), grad(n), hess(n), losses;
            std::vector<Stump> stumps;
            for (std::size_t r = 0; r < rounds; ++r) {
                double loss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double p = sigmoid(f[i]);
                    grad[i] = data.labels[i] - p; // negative gradient of logloss
                    hess[i] = std::max(p * (1.0 - p), 1e-12);
                    loss += bce_loss(data.labels[i], p);
                }
                losses.push_back(loss / static_cast<double>(n));
                Stump s = fit_stump(data.features, grad, hess);
                stumps.push_back(s);
                for (std::size_t i = 0; i < n; ++i) f[i] += lr * s.eval(data.features.row(i));
            }
            return std::make_shared<GradientBoostModel>(base, lr, std::move(stumps), d,
                                                        std::move(losses));
        }
        case Algorithm::KNN: {
            Matrix X = data.features;
            return std::make_shared<KnnModel>(std::move(X), data.labels,
                                              static_cast<std::size_t>(spec.get("k", 5)));
        }
        case Algorithm::LDA:
            return train_lda(data);
        case Algorithm::LR:
            return train_lr(data, spec.get("learning_rate", 0.1),
                            static_cast<std::size_t>(spec.get("epochs", 500)),
                            spec.get("l2", 1e-4));
        case Algorithm::MLP:
            return train_mlp(data, spec, rng);
    }
    throw std::logic_error("train_classifier: unhandled algorithm");
}

ModelPtr model_from_json(const nlohmann::json& j) {
    const std::string alg = j.at("algorithm").get<std::string>();
    if (alg == "DT") return DecisionTreeModel::from_json(j);
    if (alg == "RF" || alg == "BGG") return ForestModel::from_json(j);
    if (alg == "GB") return GradientBoostModel::from_json(j);
    if (alg == "KNN") return KnnModel::from_json(j);
    if (alg == "LDA") return LdaModel::from_json(j);
    if (alg == "LR") return LogRegModel::from_json(j);
    if (alg == "MLP") return MlpModel::from_json(j);
    throw std::invalid_argument("model_from_json: unknown algorithm '" + alg + "'");
}

void save_model(const Model& model, const std::string& path,
                const std::string& pipeline_checksum) {
    nlohmann::json j = {{"format", "nids-model"},
                        {"version", 1},
                        {"pipeline_checksum", pipeline_checksum},
                        {"model", model.to_json()}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot write " + path);
    out << j.dump() << "\n";
}

ModelPtr load_model(const std::string& path, std::string* pipeline_checksum) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "nids-model") {
        throw std::runtime_error("load_model: bad format tag in " + path);
    }
    if (pipeline_checksum) *pipeline_checksum = j.value("pipeline_checksum", "");
    return model_from_json(j.at("model"));
}

std::vector<double> predict_proba_batch(const Model& m, const Matrix& X) {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = m.predict_proba(X.row(i));
    return out;
}

std::vector<int> predict_batch(const Model& m, const Matrix& X) {
    std::vector<int> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = m.predict(X.row(i));
    return out;
}

const MlpNetwork& mlp_network_of(const Model& m) {
    const auto* mlp = dynamic_cast<const MlpModel*>(&m);
    if (!mlp) throw std::invalid_argument("mlp_network_of: model is not an MLP");
    return mlp->network();
}

} // namespace nids
