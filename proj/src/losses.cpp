#include "insindy/losses.hpp"

#include <stdexcept>

namespace insindy {

StepPairs consecutivePairs(std::vector<Eigen::VectorXd> const &times)
{
  StepPairs pairs;
  Index offset = 0;
  std::vector<double> steps;
  for (auto const &t : times) {
    for (Index k = 0; k + 1 < t.size(); ++k) {
      double const h = t(k + 1) - t(k);
      if (!(h > 0)) throw std::invalid_argument("RK4 loss needs strictly positive steps h_k");
      pairs.current.push_back(offset + k);
      pairs.next.push_back(offset + k + 1);
      steps.push_back(h);
    }
    offset += t.size();
  }
  pairs.step = Eigen::Map<Eigen::VectorXd>(steps.data(), Index(steps.size()));
  return pairs;
}

namespace loss {

ad::Var mse(ad::Var prediction, ad::Var data)
{
  return ad::scale(ad::sum(ad::square(data - prediction)), 1.0 / double(prediction.rows()));
}

ad::Var derivative(ad::Var rate, ad::Var theta, ad::Var xi)
{
  return ad::scale(ad::sum(ad::square(rate - ad::matmul(theta, xi))), 1.0 / double(rate.rows()));
}

ad::Var rk4Predict(Dictionary const &dict, ad::Var x, ad::Var xi, ad::Var h)
{
  ad::Var halfH = 0.5 * h;
  ad::Var a1 = dict.apply(x, xi);
  ad::Var a2 = dict.apply(x + halfH * a1, xi);
  ad::Var a3 = dict.apply(x + halfH * a2, xi);
  ad::Var a4 = dict.apply(x + h * a3, xi);
  return x + (1.0 / 6.0) * h * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
}

ad::Var rk4(Dictionary const &dict, ad::Var states, ad::Var xi, StepPairs const &pairs)
{
  if (pairs.size() == 0) throw std::invalid_argument("RK4 loss needs at least one consecutive pair");
  auto &tape = states.tape();
  ad::Var h = tape.constant(Tensor(pairs.step));
  ad::Var invH = tape.constant(Tensor(pairs.step.cwiseInverse()));
  ad::Var current = ad::rows(states, pairs.current);
  ad::Var next = ad::rows(states, pairs.next);
  ad::Var residual = (next - rk4Predict(dict, current, xi, h)) * invH;
  return ad::scale(ad::sum(ad::square(residual)), 1.0 / double(pairs.size()));
}

} // namespace loss
} // namespace insindy
