#include "irlab/mlp.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "irlab/text.hpp"

namespace irlab {

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  for (const auto& m : w) z.w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b) z.b.push_back(Eigen::VectorXd::Zero(v.size()));
  for (const auto& m : head_w) z.head_w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : head_b) z.head_b.push_back(Eigen::VectorXd::Zero(v.size()));
  return z;
}

bool MlpParams::all_finite() const {
  for (const auto& m : w) if (!m.allFinite()) return false;
  for (const auto& v : b) if (!v.allFinite()) return false;
  for (const auto& m : head_w) if (!m.allFinite()) return false;
  for (const auto& v : head_b) if (!v.allFinite()) return false;
  return true;
}

double MlpParams::max_abs() const {
  double m = 0.0;
  for (const auto& x : w) if (x.size()) m = std::max(m, x.cwiseAbs().maxCoeff());
  for (const auto& x : b) if (x.size()) m = std::max(m, x.cwiseAbs().maxCoeff());
  for (const auto& x : head_w) if (x.size()) m = std::max(m, x.cwiseAbs().maxCoeff());
  for (const auto& x : head_b) if (x.size()) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

void MlpParams::axpy(double alpha, const MlpParams& other) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += alpha * other.w[i];
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += alpha * other.b[i];
  for (std::size_t i = 0; i < head_w.size(); ++i) head_w[i] += alpha * other.head_w[i];
  for (std::size_t i = 0; i < head_b.size(); ++i) head_b[i] += alpha * other.head_b[i];
}

std::size_t MlpParams::flat_size() const {
  std::size_t n = 0;
  for (const auto& m : w) n += static_cast<std::size_t>(m.size());
  for (const auto& v : b) n += static_cast<std::size_t>(v.size());
  for (const auto& m : head_w) n += static_cast<std::size_t>(m.size());
  for (const auto& v : head_b) n += static_cast<std::size_t>(v.size());
  return n;
}

double* MlpParams::flat_entry(std::size_t index) {
  auto in_mat = [&index](Eigen::MatrixXd& m) -> double* {
    if (index < static_cast<std::size_t>(m.size())) return m.data() + index;
    index -= static_cast<std::size_t>(m.size());
    return nullptr;
  };
  auto in_vec = [&index](Eigen::VectorXd& v) -> double* {
    if (index < static_cast<std::size_t>(v.size())) return v.data() + index;
    index -= static_cast<std::size_t>(v.size());
    return nullptr;
  };
  for (auto& m : w) if (double* p = in_mat(m)) return p;
  for (auto& v : b) if (double* p = in_vec(v)) return p;
  for (auto& m : head_w) if (double* p = in_mat(m)) return p;
  for (auto& v : head_b) if (double* p = in_vec(v)) return p;
  throw std::out_of_range("MlpParams::flat_entry: index past end");
}

std::string MlpParams::block_name(std::size_t index) const {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (index < static_cast<std::size_t>(w[i].size())) return "w" + std::to_string(i);
    index -= static_cast<std::size_t>(w[i].size());
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (index < static_cast<std::size_t>(b[i].size())) return "b" + std::to_string(i);
    index -= static_cast<std::size_t>(b[i].size());
  }
  for (std::size_t i = 0; i < head_w.size(); ++i) {
    if (index < static_cast<std::size_t>(head_w[i].size())) return "head_w" + std::to_string(i);
    index -= static_cast<std::size_t>(head_w[i].size());
  }
  for (std::size_t i = 0; i < head_b.size(); ++i) {
    if (index < static_cast<std::size_t>(head_b[i].size())) return "head_b" + std::to_string(i);
    index -= static_cast<std::size_t>(head_b[i].size());
  }
  throw std::out_of_range("MlpParams::block_name: index past end");
}

Mlp::Mlp(std::vector<int> widths, std::vector<int> head_dims, Activation act,
         double dropout_rate, std::uint64_t init_seed)
    : widths_(std::move(widths)), head_dims_(std::move(head_dims)), act_(act),
      dropout_(dropout_rate) {
  if (widths_.size() < 1) throw std::invalid_argument("Mlp: need at least the input width");
  if (head_dims_.empty() || head_dims_.size() > 2) {
    throw std::invalid_argument("Mlp: one or two output heads supported");
  }
  for (int wd : widths_) if (wd <= 0) throw std::invalid_argument("Mlp: widths must be positive");
  for (int hd : head_dims_) if (hd <= 0) throw std::invalid_argument("Mlp: head dims must be positive");
  if (!(dropout_ >= 0.0 && dropout_ < 1.0)) {
    throw std::invalid_argument("Mlp: dropout rate must lie in [0, 1)");
  }

  Rng rng(init_seed);
  auto glorot = [&rng](int rows, int cols) {
    double bound = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rand_uniform(rng, -bound, bound);
    }
    return m;
  };
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    params_.w.push_back(glorot(widths_[l + 1], widths_[l]));
    params_.b.push_back(Eigen::VectorXd::Zero(widths_[l + 1]));
  }
  for (int hd : head_dims_) {
    params_.head_w.push_back(glorot(hd, widths_.back()));
    params_.head_b.push_back(Eigen::VectorXd::Zero(hd));
  }
}

std::vector<Eigen::MatrixXd> Mlp::forward(const Eigen::MatrixXd& input, ForwardMode mode,
                                          Rng* rng, Cache* cache) const {
  if (input.cols() != widths_.front()) {
    throw std::invalid_argument("Mlp::forward: input width " + std::to_string(input.cols()) +
                                " does not match first layer " + std::to_string(widths_.front()));
  }
  const bool train = mode == ForwardMode::Train;
  if (train && dropout_ > 0.0 && rng == nullptr) {
    throw std::invalid_argument("Mlp::forward: train mode with dropout needs an rng");
  }
  if (cache) {
    cache->input = input;
    cache->hidden.clear();
    cache->pre.clear();
    cache->mask.clear();
    cache->train = train;
  }

  Eigen::MatrixXd h = input;
  for (std::size_t l = 0; l < params_.w.size(); ++l) {
    Eigen::MatrixXd z = (h * params_.w[l].transpose()).rowwise() + params_.b[l].transpose();
    if (cache) cache->pre.push_back(z);
    Eigen::MatrixXd a;
    if (act_ == Activation::ReLU) {
      a = z.cwiseMax(0.0);
    } else {
      a = z.array().tanh().matrix();
    }
    if (train && dropout_ > 0.0) {
      Eigen::MatrixXd mask(a.rows(), a.cols());
      const double keep = 1.0 - dropout_;
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = rand_uniform(*rng) < keep ? 1.0 / keep : 0.0;
      }
      a = a.cwiseProduct(mask);
      if (cache) cache->mask.push_back(std::move(mask));
    }
    if (cache) cache->hidden.push_back(a);
    h = std::move(a);
  }

  std::vector<Eigen::MatrixXd> outputs;
  for (std::size_t k = 0; k < params_.head_w.size(); ++k) {
    outputs.push_back((h * params_.head_w[k].transpose()).rowwise() +
                      params_.head_b[k].transpose());
  }
  return outputs;
}

MlpParams Mlp::backward(const Cache& cache, const std::vector<Eigen::MatrixXd>& head_grads,
                        Eigen::MatrixXd* input_grad) const {
  if (head_grads.size() != params_.head_w.size()) {
    throw std::invalid_argument("Mlp::backward: one gradient per head required");
  }
  if (cache.pre.size() != params_.w.size()) {
    throw std::invalid_argument("Mlp::backward: cache does not match this network");
  }
  const Eigen::MatrixXd& last = params_.w.empty() ? cache.input : cache.hidden.back();

  MlpParams grads = params_.zeros_like();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(last.rows(), widths_.back());
  for (std::size_t k = 0; k < head_grads.size(); ++k) {
    if (head_grads[k].rows() != last.rows() || head_grads[k].cols() != head_dims_[k]) {
      throw std::invalid_argument("Mlp::backward: head gradient shape mismatch");
    }
    grads.head_w[k] = head_grads[k].transpose() * last;
    grads.head_b[k] = head_grads[k].colwise().sum().transpose();
    delta += head_grads[k] * params_.head_w[k];
  }

  for (std::size_t li = params_.w.size(); li-- > 0;) {
    if (cache.train && dropout_ > 0.0) delta = delta.cwiseProduct(cache.mask[li]);
    if (act_ == Activation::ReLU) {
      delta = (cache.pre[li].array() > 0.0).cast<double>().matrix().cwiseProduct(delta);
    } else {
      Eigen::MatrixXd t = cache.pre[li].array().tanh().matrix();
      delta = (1.0 - t.array().square()).matrix().cwiseProduct(delta);
    }
    const Eigen::MatrixXd& below = li == 0 ? cache.input : cache.hidden[li - 1];
    grads.w[li] = delta.transpose() * below;
    grads.b[li] = delta.colwise().sum().transpose();
    delta = delta * params_.w[li];
  }
  if (input_grad) *input_grad = delta;
  return grads;
}

namespace {

void write_matrix(std::ostream& out, const std::string& tag, const Eigen::MatrixXd& m) {
  out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_exact(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect_tag) {
  std::string tag;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> tag >> rows >> cols) || tag != expect_tag) {
    throw std::runtime_error("mlp checkpoint: expected block '" + expect_tag + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> m(r, c))) throw std::runtime_error("mlp checkpoint: truncated block " + tag);
    }
  }
  return m;
}

}  // namespace

void Mlp::save(std::ostream& out) const {
  out << "mlp v1\n";
  out << "widths";
  for (int wd : widths_) out << ' ' << wd;
  out << "\nheads";
  for (int hd : head_dims_) out << ' ' << hd;
  out << "\nactivation " << (act_ == Activation::ReLU ? "relu" : "tanh") << '\n';
  out << "dropout " << format_exact(dropout_) << '\n';
  for (std::size_t l = 0; l < params_.w.size(); ++l) {
    write_matrix(out, "w" + std::to_string(l), params_.w[l]);
    write_matrix(out, "b" + std::to_string(l), params_.b[l]);
  }
  for (std::size_t k = 0; k < params_.head_w.size(); ++k) {
    write_matrix(out, "hw" + std::to_string(k), params_.head_w[k]);
    write_matrix(out, "hb" + std::to_string(k), params_.head_b[k]);
  }
}

Mlp Mlp::load(std::istream& in) {
  std::string word, version;
  if (!(in >> word >> version) || word != "mlp" || version != "v1") {
    throw std::runtime_error("mlp checkpoint: bad magic");
  }
  std::string line;
  std::getline(in, line);

  auto read_int_list = [&in](const std::string& expect) {
    std::string tag, rest;
    if (!(in >> tag) || tag != expect) {
      throw std::runtime_error("mlp checkpoint: expected '" + expect + "' line");
    }
    std::getline(in, rest);
    std::vector<int> vals;
    for (const auto& tok : split(strip(rest), ' ')) {
      if (!tok.empty()) vals.push_back(static_cast<int>(parse_long(tok, "mlp checkpoint")));
    }
    return vals;
  };
  std::vector<int> widths = read_int_list("widths");
  std::vector<int> heads = read_int_list("heads");

  std::string tag, act_name;
  double dropout = 0.0;
  if (!(in >> tag >> act_name) || tag != "activation") {
    throw std::runtime_error("mlp checkpoint: expected activation line");
  }
  if (!(in >> tag >> dropout) || tag != "dropout") {
    throw std::runtime_error("mlp checkpoint: expected dropout line");
  }
  Activation act = act_name == "relu" ? Activation::ReLU : Activation::Tanh;

  Mlp net(widths, heads, act, dropout, /*init_seed=*/0);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    net.params_.w[l] = read_matrix(in, "w" + std::to_string(l));
    net.params_.b[l] = read_matrix(in, "b" + std::to_string(l));
  }
  for (std::size_t k = 0; k < heads.size(); ++k) {
    net.params_.head_w[k] = read_matrix(in, "hw" + std::to_string(k));
    net.params_.head_b[k] = read_matrix(in, "hb" + std::to_string(k));
  }
  return net;
}

void mlp_save(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("mlp_save: cannot open " + path);
  net.save(out);
}

Mlp mlp_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mlp_load: cannot open " + path);
  return Mlp::load(in);
}

}  // namespace irlab
