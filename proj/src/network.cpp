#include "evfusion/network.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "evfusion/activation.hpp"

namespace evfusion {

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(fan_in, fan_out);
    for (auto& x : m.data()) {
        x = dist(rng);
    }
    return m;
}

nlohmann::json tensor_to_json(const Matrix& m)
{
    return {{"shape", {m.rows(), m.cols()}}, {"data", m.data()}};
}

Matrix tensor_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name)
{
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto data = j.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != rows || shape[1] != cols || data.size() != rows * cols) {
        std::ostringstream os;
        os << "tensor '" << name << "' has unexpected shape; expected " << rows << "x" << cols;
        throw std::invalid_argument(os.str());
    }
    return Matrix(rows, cols, std::move(data));
}

/// out = x w + b (bias broadcast over rows).
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b)
{
    Matrix out(x.rows(), w.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = out.row(i);
        std::copy(b.data().begin(), b.data().end(), row.begin());
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double xik = x(i, k);
            for (std::size_t j = 0; j < w.cols(); ++j) {
                row[j] += xik * w(k, j);
            }
        }
    }
    return out;
}

}  // namespace

EvidentialNetwork EvidentialNetwork::initialize(std::span<const std::size_t> input_dims, std::size_t classes,
                                                std::size_t hidden, std::uint64_t seed)
{
    if (input_dims.empty() || classes < 1 || hidden < 1) {
        throw std::invalid_argument("network needs at least one modality, one class and one hidden unit");
    }
    EvidentialNetwork net;
    net.classes_ = classes;
    net.hidden_ = hidden;
    std::mt19937_64 rng(seed);
    for (std::size_t d : input_dims) {
        if (d < 1) {
            throw std::invalid_argument("modality input dimension must be positive");
        }
        ViewParameters p;
        p.w1 = glorot_uniform(d, hidden, rng);
        p.b1 = Matrix(1, hidden, 0.0);
        p.w2 = glorot_uniform(hidden, classes, rng);
        p.b2 = Matrix(1, classes, 0.0);
        net.views_.push_back(std::move(p));
    }
    return net;
}

std::vector<std::size_t> EvidentialNetwork::input_dims() const
{
    std::vector<std::size_t> d;
    for (const auto& v : views_) {
        d.push_back(v.w1.rows());
    }
    return d;
}

std::vector<Matrix*> EvidentialNetwork::parameters()
{
    std::vector<Matrix*> out;
    for (auto& v : views_) {
        out.insert(out.end(), {&v.w1, &v.b1, &v.w2, &v.b2});
    }
    return out;
}

std::vector<const Matrix*> EvidentialNetwork::parameters() const
{
    std::vector<const Matrix*> out;
    for (const auto& v : views_) {
        out.insert(out.end(), {&v.w1, &v.b1, &v.w2, &v.b2});
    }
    return out;
}

std::size_t EvidentialNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const Matrix* m : parameters()) {
        n += m->size();
    }
    return n;
}

Matrix EvidentialNetwork::evidence(std::size_t v, const Matrix& features) const
{
    const auto& p = view(v);
    if (features.cols() != p.w1.rows()) {
        std::ostringstream os;
        os << "modality " << v << " expects " << p.w1.rows() << " features, got " << features.cols();
        throw std::invalid_argument(os.str());
    }
    Matrix hidden = affine(features, p.w1, p.b1);
    for (auto& x : hidden.data()) {
        x = x > 0.0 ? x : 0.0;
    }
    Matrix out = affine(hidden, p.w2, p.b2);
    for (auto& x : out.data()) {
        x = capped_exp(x);
    }
    return out;
}

std::vector<SubjectiveOpinion> EvidentialNetwork::opinions(std::span<const Matrix> views, std::size_t row) const
{
    if (views.size() != views_.size()) {
        throw std::invalid_argument("modality count differs from the network");
    }
    std::vector<SubjectiveOpinion> out;
    out.reserve(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        Matrix x(1, views[v].cols());
        const auto src = views[v].row(row);
        std::copy(src.begin(), src.end(), x.row(0).begin());
        const Matrix e = evidence(v, x);
        out.push_back(opinion_from_evidence(EvidenceVector(e.data())));
    }
    return out;
}

nlohmann::json EvidentialNetwork::to_json() const
{
    nlohmann::json views = nlohmann::json::array();
    for (const auto& v : views_) {
        views.push_back({
            {"w1", tensor_to_json(v.w1)},
            {"b1", tensor_to_json(v.b1)},
            {"w2", tensor_to_json(v.w2)},
            {"b2", tensor_to_json(v.b2)},
        });
    }
    return {{"format", "evfusion-network"}, {"version", 1}, {"classes", classes_}, {"hidden", hidden_}, {"views", views}};
}

EvidentialNetwork EvidentialNetwork::from_json(const nlohmann::json& j)
{
    if (j.value("format", std::string()) != "evfusion-network") {
        throw std::invalid_argument("not an evfusion network dump");
    }
    EvidentialNetwork net;
    net.classes_ = j.at("classes").get<std::size_t>();
    net.hidden_ = j.at("hidden").get<std::size_t>();
    for (const auto& v : j.at("views")) {
        const auto d = v.at("w1").at("shape").at(0).get<std::size_t>();
        ViewParameters p;
        p.w1 = tensor_from_json(v.at("w1"), d, net.hidden_, "w1");
        p.b1 = tensor_from_json(v.at("b1"), 1, net.hidden_, "b1");
        p.w2 = tensor_from_json(v.at("w2"), net.hidden_, net.classes_, "w2");
        p.b2 = tensor_from_json(v.at("b2"), 1, net.classes_, "b2");
        net.views_.push_back(std::move(p));
    }
    return net;
}

void EvidentialNetwork::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << to_json().dump();
}

EvidentialNetwork EvidentialNetwork::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return from_json(nlohmann::json::parse(in));
}

namespace ad {

Var BoundNetwork::evidence(std::size_t v, Var features) const
{
    const Var& w1 = parameters.at(4 * v);
    const Var& b1 = parameters.at(4 * v + 1);
    const Var& w2 = parameters.at(4 * v + 2);
    const Var& b2 = parameters.at(4 * v + 3);
    const Var hidden = relu(matmul(features, w1) + b1);
    return capped_exp(matmul(hidden, w2) + b2);
}

BoundNetwork bind(Tape& tape, const EvidentialNetwork& network)
{
    BoundNetwork bound;
    for (const Matrix* m : network.parameters()) {
        bound.parameters.push_back(tape.variable(*m));
    }
    return bound;
}

}  // namespace ad

}  // namespace evfusion
