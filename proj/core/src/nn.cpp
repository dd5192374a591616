#include "v2xslice/nn.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "v2xslice/rng.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

namespace {

constexpr int kCheckpointVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double act(Activation a, double x) { return a == Activation::kRelu ? (x > 0.0 ? x : 0.0) : std::tanh(x); }

double act_grad(Activation a, double x) {
  if (a == Activation::kRelu) return x > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

std::string layer_name(const std::string& head, std::size_t j, const char* part) {
  return fmt::format("{}.{}.{}", head, j, part);
}

}  // namespace

const ParamVector::Slice& ParamVector::slice(const std::string& name) const {
  for (const auto& s : slices)
    if (s.name == name) return s;
  throw ContractViolation(fmt::format("no parameter slice '{}'", name));
}

Eigen::Map<Mat> ParamVector::view(const std::string& name) {
  const auto& s = slice(name);
  return Eigen::Map<Mat>(values.data() + s.offset, s.rows, s.cols);
}

Eigen::Map<const Mat> ParamVector::view(const std::string& name) const {
  const auto& s = slice(name);
  return Eigen::Map<const Mat>(values.data() + s.offset, s.rows, s.cols);
}

Vec ParamVector::mask(const std::vector<std::string>& prefixes) const {
  Vec m = Vec::Zero(values.size());
  for (const auto& s : slices)
    for (const auto& p : prefixes)
      if (s.name.compare(0, p.size(), p) == 0 && (s.name.size() == p.size() || s.name[p.size()] == '.'))
        m.segment(s.offset, s.size()).setOnes();
  return m;
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError(fmt::format("unknown activation '{}' (expected relu or tanh)", s));
}

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

RecurrentNet::RecurrentNet(NetConfig config) : config_(std::move(config)) {
  if (config_.input_dim < 1 || config_.lstm_units < 1) throw ConfigError("network needs positive input and LSTM sizes");
  Eigen::Index offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    params_.slices.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  const int h = config_.lstm_units;
  add("lstm.W", 4 * h, config_.input_dim);
  add("lstm.U", 4 * h, h);
  add("lstm.b", 4 * h, 1);
  for (const auto& head : config_.heads) {
    if (head.outputs < 1) throw ConfigError(fmt::format("head '{}' needs at least one output", head.name));
    int in = h;
    std::vector<int> sizes = head.hidden;
    sizes.push_back(head.outputs);
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (sizes[j] < 1) throw ConfigError(fmt::format("head '{}' layer {} has no units", head.name, j));
      add(layer_name(head.name, j, "W"), sizes[j], in);
      add(layer_name(head.name, j, "b"), sizes[j], 1);
      in = sizes[j];
    }
  }
  params_.values = Vec::Zero(offset);
}

std::size_t RecurrentNet::head_index(const std::string& name) const {
  for (std::size_t i = 0; i < config_.heads.size(); ++i)
    if (config_.heads[i].name == name) return i;
  throw ContractViolation(fmt::format("network has no head '{}'", name));
}

void RecurrentNet::initialize(std::uint64_t seed) {
  Engine rng = make_engine(seed);
  for (const auto& s : params_.slices) {
    auto v = params_.values.segment(s.offset, s.size());
    if (s.cols == 1 && s.name.ends_with(".b")) {
      v.setZero();
      if (s.name == "lstm.b") v.segment(config_.lstm_units, config_.lstm_units).setOnes();
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  }
}

RecurrentNet::Forward RecurrentNet::forward(const Mat& window) const {
  if (window.cols() != config_.input_dim || window.rows() < 1)
    throw ContractViolation(
        fmt::format("window is {}x{}, network expects Kx{}", window.rows(), window.cols(), config_.input_dim));
  const int h = config_.lstm_units;
  const Eigen::Index k = window.rows();
  const auto W = params_.view("lstm.W");
  const auto U = params_.view("lstm.U");
  const auto b = params_.view("lstm.b");

  Forward f;
  f.x = window;
  f.z.resize(4 * h, k);
  for (Mat* m : {&f.i, &f.f, &f.g, &f.o, &f.c, &f.h}) m->resize(h, k);
  Vec h_prev = Vec::Zero(h);
  Vec c_prev = Vec::Zero(h);
  for (Eigen::Index t = 0; t < k; ++t) {
    f.z.col(t) = W * window.row(t).transpose() + U * h_prev + b;
    for (int u = 0; u < h; ++u) {
      const double ig = sigmoid(f.z(u, t));
      const double fg = sigmoid(f.z(h + u, t));
      const double gg = act(config_.lstm_activation, f.z(2 * h + u, t));
      const double og = sigmoid(f.z(3 * h + u, t));
      const double c = fg * c_prev[u] + ig * gg;
      f.i(u, t) = ig;
      f.f(u, t) = fg;
      f.g(u, t) = gg;
      f.o(u, t) = og;
      f.c(u, t) = c;
      f.h(u, t) = og * act(config_.lstm_activation, c);
    }
    h_prev = f.h.col(t);
    c_prev = f.c.col(t);
  }

  f.head_pre.resize(config_.heads.size());
  f.head_in.resize(config_.heads.size());
  for (std::size_t hi = 0; hi < config_.heads.size(); ++hi) {
    const auto& head = config_.heads[hi];
    Vec a = h_prev;
    const std::size_t layers = head.hidden.size() + 1;
    for (std::size_t j = 0; j < layers; ++j) {
      f.head_in[hi].push_back(a);
      Vec z = params_.view(layer_name(head.name, j, "W")) * a + params_.view(layer_name(head.name, j, "b"));
      f.head_pre[hi].push_back(z);
      a = j + 1 < layers ? Vec(z.cwiseMax(0.0)) : z;
    }
    f.outputs.push_back(a);
  }
  return f;
}

Vec RecurrentNet::head_output(const Mat& window, const std::string& head) const {
  return forward(window).outputs[head_index(head)];
}

Vec RecurrentNet::lstm_final(const Mat& window) const {
  const auto f = forward(window);
  return f.h.col(f.h.cols() - 1);
}

void RecurrentNet::backward(const Forward& fwd, const std::vector<Vec>& d_outputs, Vec& grad) const {
  if (grad.size() != params_.values.size()) throw ContractViolation("gradient vector has the wrong size");
  if (d_outputs.size() != config_.heads.size()) throw ContractViolation("need one output gradient per head");
  const int h = config_.lstm_units;
  const Eigen::Index k = fwd.x.rows();
  auto slice_of = [&](const std::string& name) {
    const auto& s = params_.slice(name);
    return Eigen::Map<Mat>(grad.data() + s.offset, s.rows, s.cols);
  };

  Vec dh = Vec::Zero(h);
  for (std::size_t hi = 0; hi < config_.heads.size(); ++hi) {
    if (d_outputs[hi].size() == 0) continue;
    const auto& head = config_.heads[hi];
    if (d_outputs[hi].size() != head.outputs)
      throw ContractViolation(fmt::format("head '{}' gradient has size {}", head.name, d_outputs[hi].size()));
    Vec d = d_outputs[hi];
    for (std::size_t j = head.hidden.size() + 1; j-- > 0;) {
      if (j < head.hidden.size()) d = d.cwiseProduct((fwd.head_pre[hi][j].array() > 0.0).cast<double>().matrix());
      slice_of(layer_name(head.name, j, "W")).noalias() += d * fwd.head_in[hi][j].transpose();
      slice_of(layer_name(head.name, j, "b")) += d;
      d = params_.view(layer_name(head.name, j, "W")).transpose() * d;
    }
    dh += d;
  }

  auto dW = slice_of("lstm.W");
  auto dU = slice_of("lstm.U");
  auto db = slice_of("lstm.b");
  const auto U = params_.view("lstm.U");
  Vec dc = Vec::Zero(h);
  Vec dz(4 * h);
  for (Eigen::Index t = k; t-- > 0;) {
    for (int u = 0; u < h; ++u) {
      const double c = fwd.c(u, t);
      const double c_prev = t > 0 ? fwd.c(u, t - 1) : 0.0;
      const double ig = fwd.i(u, t), fg = fwd.f(u, t), gg = fwd.g(u, t), og = fwd.o(u, t);
      const double dcu = dc[u] + dh[u] * og * act_grad(config_.lstm_activation, c);
      dz[u] = dcu * gg * ig * (1.0 - ig);
      dz[h + u] = dcu * c_prev * fg * (1.0 - fg);
      dz[2 * h + u] = dcu * ig * act_grad(config_.lstm_activation, fwd.z(2 * h + u, t));
      dz[3 * h + u] = dh[u] * act(config_.lstm_activation, c) * og * (1.0 - og);
      dc[u] = dcu * fg;
    }
    dW.noalias() += dz * fwd.x.row(t);
    if (t > 0) dU.noalias() += dz * fwd.h.col(t - 1).transpose();
    db += dz;
    dh = U.transpose() * dz;
  }
}

nlohmann::json RecurrentNet::to_json() const {
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& hd : config_.heads) heads.push_back({{"name", hd.name}, {"hidden", hd.hidden}, {"outputs", hd.outputs}});
  nlohmann::json params = nlohmann::json::object();
  for (const auto& s : params_.slices) {
    std::vector<double> v(params_.values.data() + s.offset, params_.values.data() + s.offset + s.size());
    params[s.name] = v;
  }
  return {{"format", "v2xslice-net"},
          {"version", kCheckpointVersion},
          {"config",
           {{"input_dim", config_.input_dim},
            {"lstm_units", config_.lstm_units},
            {"lstm_activation", to_string(config_.lstm_activation)},
            {"heads", heads}}},
          {"params", params}};
}

RecurrentNet RecurrentNet::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "v2xslice-net") throw ConfigError("not a network checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError(fmt::format("unsupported checkpoint version {}", j.at("version").dump()));
    const auto& c = j.at("config");
    NetConfig cfg;
    cfg.input_dim = c.at("input_dim").get<int>();
    cfg.lstm_units = c.at("lstm_units").get<int>();
    cfg.lstm_activation = parse_activation(c.at("lstm_activation").get<std::string>());
    for (const auto& hd : c.at("heads"))
      cfg.heads.push_back({hd.at("name").get<std::string>(), hd.at("hidden").get<std::vector<int>>(),
                           hd.at("outputs").get<int>()});
    RecurrentNet net(cfg);
    const auto& p = j.at("params");
    if (p.size() != net.params_.slices.size()) throw ConfigError("checkpoint parameter slices do not match its config");
    for (const auto& s : net.params_.slices) {
      const auto v = p.at(s.name).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != s.size())
        throw ConfigError(fmt::format("checkpoint slice '{}' has {} values, expected {}", s.name, v.size(), s.size()));
      for (Eigen::Index i = 0; i < s.size(); ++i) net.params_.values[s.offset + i] = v[static_cast<std::size_t>(i)];
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void RecurrentNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << to_json().dump() << '\n';
}

RecurrentNet RecurrentNet::load(const std::filesystem::path& path) {
  return from_json(parse_json_text(read_text_file(path), path.string()));
}

Vec softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Vec log_softmax_grad(const Vec& logits, int action) {
  Vec g = -softmax(logits);
  g[action] += 1.0;
  return g;
}

NetConfig actor_critic_config(int input_dim, int actions, int lstm_units, std::vector<int> hidden, Activation act) {
  return NetConfig{input_dim, lstm_units, act, {{"actor", hidden, actions}, {"critic", hidden, 1}}};
}

NetConfig drqn_config(int input_dim, int actions, int lstm_units, std::vector<int> hidden, Activation act) {
  return NetConfig{input_dim, lstm_units, act, {{"q", std::move(hidden), actions}}};
}

void Sgd::descend(Vec& params, const Vec& grad) {
  params.array() -= lr_ * mask_.array() * grad.array();
}

nlohmann::json Sgd::state() const { return {{"kind", "sgd"}, {"lr", lr_}}; }

Adam::Adam(double lr, Vec mask, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), mask_(std::move(mask)) {
  m_ = Vec::Zero(mask_.size());
  v_ = Vec::Zero(mask_.size());
}

void Adam::descend(Vec& params, const Vec& grad) {
  if (grad.size() != mask_.size() || params.size() != mask_.size()) throw ContractViolation("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (mask_[i] == 0.0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

nlohmann::json Adam::state() const {
  return {{"kind", "adam"}, {"lr", lr_}, {"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_}, {"steps", t_}};
}

}  // namespace v2xslice
