#ifndef POLYFIT_PARAMNET_HPP
#define POLYFIT_PARAMNET_HPP

#include "polyfit/trainer.hpp"

namespace polyfit {

/// One-hidden-layer rectifier network.
struct Mlp {
  MatrixXd w1;  // hidden x input
  VectorXd b1;  // hidden
  MatrixXd w2;  // output x hidden
  VectorXd b2;  // output
};

/// Parameterized polytope: two networks map theta to the raw (A, b); rows
/// are normalized when the polytope is emitted.
struct MlpParams {
  int theta_dim = 0;
  int hidden = 128;
  int facets = 0;  // M
  int dim = 0;     // n
  Mlp a_net;       // output size M*n, row-major over A
  Mlp b_net;       // output size M
  ThetaBox box;
  Normalizer norm;

  void validate() const;
};

struct ForwardCache {
  VectorXd theta_norm;
  VectorXd pre_a, hid_a;
  VectorXd pre_b, hid_b;
  MatrixXd A_raw;  // M x n, rows not yet unit
  VectorXd b_raw;
  VectorXd row_norms;
};

/// theta is normalized into [0,1] by the box before entering the networks.
ForwardCache forward(const MlpParams& net, const VectorXd& theta);

/// Row-normalized polytope emitted from a forward pass.
Polytope emit(const MlpParams& net, const ForwardCache& cache);

struct MlpGrads {
  Mlp a_net;
  Mlp b_net;
};

/// Exact chain rule from gradients on the row-normalized (A, b) back to
/// every weight, through the quotient-rule row normalization, the reshape
/// and both networks. The rectifier derivative at exactly zero is zero.
MlpGrads backward(const MlpParams& net, const ForwardCache& cache,
                  const MatrixXd& grad_A, const VectorXd& grad_b);

/// Weights start at zero and output biases at (A0, b0), so the network is
/// exactly constant at the outer initialization; hidden biases start
/// positive so the units are active and can learn.
MlpParams init_param_net(int theta_dim, int hidden, const Polytope& P0,
                         const ThetaBox& box, Rng& rng);

struct ParamFitResult {
  MlpParams net;
  TrainHistory history;
};

/// Parameterized training: each iteration samples theta uniformly from the
/// box, emits P(theta), and pushes the directional active-set loss through
/// the networks. Evaluations run at the box center.
ParamFitResult fit_parameterized(const RegionPtr& region, const ThetaBox& box,
                                 const TrainConfig& config);

}  // namespace polyfit

#endif  // POLYFIT_PARAMNET_HPP
