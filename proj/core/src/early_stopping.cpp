#include "assoc/early_stopping.hpp"

#include <algorithm>

#include "assoc/errors.hpp"

namespace assoc {

EarlyStopper::EarlyStopper(std::size_t window, std::size_t patience) {
  if (window < 2) throw ContractError("early-stopping window must be >= 2");
  if (patience < 1) throw ContractError("early-stopping patience must be >= 1");
  trace_.window = window;
  trace_.patience = patience;
}

bool EarlyStopper::observe(double accuracy) {
  auto& acc = trace_.accuracies;
  acc.push_back(accuracy);
  const std::size_t e = acc.size();
  const std::size_t w = trace_.window;
  if (e < w) return false;

  double sum = 0.0;
  for (std::size_t i = e - w; i < e; ++i) sum += acc[i];
  trace_.window_means.push_back(sum / static_cast<double>(w));

  const auto& means = trace_.window_means;
  if (means.size() >= 2) {
    const double prev = means[means.size() - 2];
    const double cur = means.back();
    decreasing_ = cur < prev - kTieTolerance ? decreasing_ + 1 : 0;
  }
  if (decreasing_ >= trace_.patience) {
    trace_.stopped = true;
    trace_.stop_epoch = e;
    return true;
  }
  return false;
}

std::size_t EarlyStopper::best_epoch_in_window() const {
  const auto& acc = trace_.accuracies;
  if (acc.empty()) return 0;
  const std::size_t first = acc.size() > trace_.window ? acc.size() - trace_.window : 0;
  std::size_t best = first;
  for (std::size_t i = first + 1; i < acc.size(); ++i)
    if (acc[i] > acc[best]) best = i;
  return best + 1;
}

EarlyStopTrace EarlyStopper::finish() const {
  EarlyStopTrace out = trace_;
  out.stop_epoch = out.accuracies.size();
  out.best_epoch = best_epoch_in_window();
  return out;
}

EarlyStopTrace replay_early_stopping(std::span<const double> accuracies, std::size_t window,
                                     std::size_t patience) {
  EarlyStopper stopper(window, patience);
  for (double a : accuracies)
    if (stopper.observe(a)) break;
  return stopper.finish();
}

}  // namespace assoc
