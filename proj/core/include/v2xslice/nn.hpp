#ifndef V2XSLICE_NN_HPP_
#define V2XSLICE_NN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace v2xslice {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Flat weight vector with named sub-ranges ("lstm.W", "actor.0.b", ...).
struct ParamVector {
  struct Slice {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 1;
    Eigen::Index size() const { return rows * cols; }
  };

  Vec values;
  std::vector<Slice> slices;

  const Slice& slice(const std::string& name) const;
  /// Column-major view of a slice, shaped rows x cols.
  Eigen::Map<Mat> view(const std::string& name);
  Eigen::Map<const Mat> view(const std::string& name) const;
  /// 1 for every entry whose slice name starts with one of the prefixes.
  Vec mask(const std::vector<std::string>& prefixes) const;
  bool all_finite() const { return values.allFinite(); }
};

enum class Activation { kRelu, kTanh };

Activation parse_activation(const std::string& s);
std::string to_string(Activation a);

struct HeadConfig {
  std::string name;
  std::vector<int> hidden;  // ReLU layers after the shared LSTM
  int outputs = 1;          // linear output layer
};

struct NetConfig {
  int input_dim = 4;
  int lstm_units = 16;
  Activation lstm_activation = Activation::kRelu;  // cell-input and cell-output nonlinearity
  std::vector<HeadConfig> heads;
};

/// Shared-LSTM network: the final hidden state of the LSTM feeds every head.
class RecurrentNet {
 public:
  struct Forward {
    Mat x;                      // K x input_dim
    Mat z;                      // 4H x K gate pre-activations (i, f, g, o)
    Mat i, f, g, o, c, h;       // H x K
    std::vector<std::vector<Vec>> head_pre;  // per head, per layer pre-activation
    std::vector<std::vector<Vec>> head_in;   // per head, per layer input
    std::vector<Vec> outputs;                // per head
  };

  RecurrentNet() = default;
  explicit RecurrentNet(NetConfig config);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, forget bias 1.
  void initialize(std::uint64_t seed);

  const NetConfig& config() const { return config_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  std::size_t head_index(const std::string& name) const;

  /// Runs the window (rows oldest first) through the LSTM and every head.
  Forward forward(const Mat& window) const;
  Vec head_output(const Mat& window, const std::string& head) const;
  /// Final LSTM hidden state only.
  Vec lstm_final(const Mat& window) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/d(output) per head;
  /// an empty vector skips that head.
  void backward(const Forward& fwd, const std::vector<Vec>& d_outputs, Vec& grad) const;

  nlohmann::json to_json() const;
  static RecurrentNet from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RecurrentNet load(const std::filesystem::path& path);

 private:
  NetConfig config_;
  ParamVector params_;
};

Vec softmax(const Vec& logits);
/// d log softmax(logits)[a] / d logits = onehot(a) - softmax(logits).
Vec log_softmax_grad(const Vec& logits, int action);

NetConfig actor_critic_config(int input_dim, int actions, int lstm_units, std::vector<int> hidden,
                              Activation act = Activation::kRelu);
NetConfig drqn_config(int input_dim, int actions, int lstm_units, std::vector<int> hidden,
                      Activation act = Activation::kRelu);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// params -= step(grad) on masked entries only.
  virtual void descend(Vec& params, const Vec& grad) = 0;
  virtual nlohmann::json state() const = 0;
};

class Sgd : public Optimizer {
 public:
  Sgd(double lr, Vec mask) : lr_(lr), mask_(std::move(mask)) {}
  void descend(Vec& params, const Vec& grad) override;
  nlohmann::json state() const override;

 private:
  double lr_;
  Vec mask_;
};

class Adam : public Optimizer {
 public:
  Adam(double lr, Vec mask, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7);
  void descend(Vec& params, const Vec& grad) override;
  nlohmann::json state() const override;

 private:
  double lr_, beta1_, beta2_, eps_;
  Vec mask_, m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace v2xslice

#endif  // V2XSLICE_NN_HPP_
