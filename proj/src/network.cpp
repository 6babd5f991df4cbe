#include "opau/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opau {
namespace {

Eigen::MatrixXd activate(const Identity&, const Eigen::MatrixXd& z) { return z; }

Eigen::MatrixXd activate(const Baseline& kind, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd a(z.rows(), z.cols());
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row)
      a(row, col) = baseline_forward(kind, z(row, col));
  return a;
}

Eigen::MatrixXd activate(const OpauParams& params, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd a(z.rows(), z.cols());
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row)
      a(row, col) = opau_eval(params, z(row, col));
  return a;
}

Eigen::MatrixXd activate(const PauParams& params, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd a(z.rows(), z.cols());
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row)
      a(row, col) = pau_eval(params, z(row, col));
  return a;
}

Eigen::MatrixXd backprop_activation(const Identity&, const Eigen::MatrixXd&,
                                    const Eigen::MatrixXd& upstream, LayerGrads&) {
  return upstream;
}

Eigen::MatrixXd backprop_activation(const Baseline& kind, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& upstream, LayerGrads&) {
  Eigen::MatrixXd dz(z.rows(), z.cols());
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row)
      dz(row, col) = upstream(row, col) * baseline_deriv(kind, z(row, col));
  return dz;
}

Eigen::MatrixXd backprop_activation(const OpauParams& params, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& upstream, LayerGrads& lg) {
  lg.act_c = Eigen::VectorXd::Zero(params.k + 1);
  lg.act_d = Eigen::VectorXd::Zero(params.l);
  Eigen::MatrixXd dz(z.rows(), z.cols());
  OpauGrad grad;
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row) {
      opau_eval(params, z(row, col), &grad);
      const double up = upstream(row, col);
      dz(row, col) = up * grad.d_input;
      lg.act_c += up * grad.d_c;
      lg.act_d += up * grad.d_d;
    }
  return dz;
}

Eigen::MatrixXd backprop_activation(const PauParams& params, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& upstream, LayerGrads& lg) {
  lg.act_c = Eigen::VectorXd::Zero(params.a.size());
  lg.act_d = Eigen::VectorXd::Zero(params.b.size());
  Eigen::MatrixXd dz(z.rows(), z.cols());
  PauGrad grad;
  for (Eigen::Index col = 0; col < z.cols(); ++col)
    for (Eigen::Index row = 0; row < z.rows(); ++row) {
      pau_eval(params, z(row, col), &grad);
      const double up = upstream(row, col);
      dz(row, col) = up * grad.d_input;
      lg.act_c += up * grad.d_a;
      lg.act_d += up * grad.d_b;
    }
  return dz;
}

// Summed loss over columns of `output` (class scores per sample); when
// `dlogits` is given, also dL/doutput: softmax minus one-hot for
// cross-entropy, plain residual against one-hot for MSE.
double loss_gradient(Loss loss, const Eigen::MatrixXd& output,
                     const std::vector<int>& labels, Eigen::MatrixXd* dlogits) {
  const Eigen::Index classes = output.rows();
  const Eigen::Index batch = output.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw std::invalid_argument("loss: one label required per sample");
  if (dlogits) dlogits->resize(classes, batch);
  double total = 0.0;
  for (Eigen::Index s = 0; s < batch; ++s) {
    const int label = labels[static_cast<std::size_t>(s)];
    if (label < 0 || label >= classes)
      throw std::invalid_argument("loss: label " + std::to_string(label) +
                                  " out of range for " + std::to_string(classes) +
                                  " outputs");
    if (loss == Loss::CrossEntropy) {
      const double zmax = output.col(s).maxCoeff();
      const Eigen::VectorXd e = (output.col(s).array() - zmax).exp();
      const double sum = e.sum();
      total += std::log(sum) - (output(label, s) - zmax);
      if (dlogits) {
        dlogits->col(s) = e / sum;
        (*dlogits)(label, s) -= 1.0;
      }
    } else {
      Eigen::VectorXd r = output.col(s);
      r[label] -= 1.0;
      total += 0.5 * r.squaredNorm();
      if (dlogits) dlogits->col(s) = r;
    }
  }
  return total;
}

}  // namespace

void Network::validate() const {
  if (layers.empty())
    throw std::invalid_argument("network: needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& layer = layers[i];
    const std::string where = "network: layer " + std::to_string(i);
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
      throw std::invalid_argument(where + " has empty weights");
    if (layer.weights.rows() != layer.biases.size())
      throw std::invalid_argument(where + " bias length does not match weight rows");
    if (i > 0 && layers[i - 1].out_dim() != layer.in_dim())
      throw std::invalid_argument(where + " input dim does not chain from layer " +
                                  std::to_string(i - 1));
    if (!layer.weights.allFinite() || !layer.biases.allFinite())
      throw std::invalid_argument(where + " has non-finite parameters");
    if (const OpauParams* p = std::get_if<OpauParams>(&layer.activation))
      p->validate();
    if (const PauParams* p = std::get_if<PauParams>(&layer.activation))
      p->validate();
  }
}

Eigen::MatrixXd network_forward(Network& net, const DatasetBatch& batch,
                                ForwardCache* cache) {
  net.validate();
  if (batch.size() > 0 && batch.dim() != net.in_dim())
    throw std::invalid_argument("network_forward: batch dim " +
                                std::to_string(batch.dim()) +
                                " does not match network input dim " +
                                std::to_string(net.in_dim()));

  ++net.forward_serial;
  Eigen::MatrixXd a = batch.size() > 0
                          ? Eigen::MatrixXd(batch.features.transpose())
                          : Eigen::MatrixXd(net.in_dim(), 0);
  if (cache) {
    cache->net = &net;
    cache->serial = net.forward_serial;
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (const DenseLayer& layer : net.layers) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.biases;
    a = std::visit([&](const auto& act) { return activate(act, z); },
                   layer.activation);
    if (cache) cache->pre.push_back(std::move(z));
  }
  if (cache) cache->output = a;
  return a.transpose();
}

NetworkGrads network_backward(const Network& net, const ForwardCache& cache,
                              const std::vector<int>& labels) {
  net.validate();
  if (cache.net != &net || cache.serial != net.forward_serial)
    throw std::logic_error(
        "network_backward: cache is not from the most recent forward pass on "
        "this network");
  const std::size_t depth = net.layers.size();
  if (cache.inputs.size() != depth || cache.pre.size() != depth)
    throw std::logic_error("network_backward: incomplete forward cache");

  NetworkGrads grads;
  grads.layers.resize(depth);
  Eigen::MatrixXd upstream;  // dL/d(layer output), out x batch
  grads.loss = loss_gradient(net.loss, cache.output, labels, &upstream);

  for (std::size_t li = depth; li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    LayerGrads& lg = grads.layers[li];
    const Eigen::MatrixXd dz = std::visit(
        [&](const auto& act) {
          return backprop_activation(act, cache.pre[li], upstream, lg);
        },
        layer.activation);
    lg.weights.noalias() = dz * cache.inputs[li].transpose();
    lg.biases = dz.rowwise().sum();
    if (li > 0) upstream.noalias() = layer.weights.transpose() * dz;
  }
  return grads;
}

double batch_loss(Loss loss, const Eigen::MatrixXd& predictions,
                  const std::vector<int>& labels) {
  const Eigen::MatrixXd logits = predictions.transpose();
  return loss_gradient(loss, logits, labels, nullptr);
}

double batch_accuracy(const Eigen::MatrixXd& predictions,
                      const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != predictions.rows())
    throw std::invalid_argument("accuracy: one label required per sample");
  if (labels.empty()) return 0.0;
  int hits = 0;
  for (Eigen::Index s = 0; s < predictions.rows(); ++s) {
    Eigen::Index arg = 0;
    predictions.row(s).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(s)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ExtraParamCount count_extra_params(const Network& net) {
  ExtraParamCount count;
  for (const DenseLayer& layer : net.layers) {
    if (const OpauParams* p = std::get_if<OpauParams>(&layer.activation)) {
      count.paper += p->k + p->l;
      count.stored += p->k + 1 + p->l;
    } else if (const PauParams* p = std::get_if<PauParams>(&layer.activation)) {
      const int k = static_cast<int>(p->a.size()) - 1;
      const int l = static_cast<int>(p->b.size());
      count.paper += k + l;
      count.stored += k + 1 + l;
    }
  }
  return count;
}

}  // namespace opau
