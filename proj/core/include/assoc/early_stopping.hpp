#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace assoc {

/// Record of the sliding-window early-stopping rule. Epochs are 1-based;
/// accuracies[e - 1] belongs to epoch e and window_means[e - window] is the
/// mean of epochs e - window + 1 .. e.
struct EarlyStopTrace {
  std::vector<double> accuracies;
  std::vector<double> window_means;
  std::size_t window = 0;
  std::size_t patience = 1;
  std::size_t stop_epoch = 0;
  std::size_t best_epoch = 0;  // highest accuracy inside the final window
  bool stopped = false;        // false when an epoch cap ended training
};

/// Stops once the window mean has been strictly lower than the previous
/// window mean for `patience` consecutive epochs.
class EarlyStopper {
 public:
  // Window means closer than this are treated as equal.
  static constexpr double kTieTolerance = 1e-12;

  EarlyStopper(std::size_t window, std::size_t patience = 1);

  // Records the next epoch's validation accuracy; true means stop now.
  bool observe(double accuracy);

  std::size_t epochs() const noexcept { return trace_.accuracies.size(); }
  // Earliest epoch holding the maximum accuracy among the last `window`.
  std::size_t best_epoch_in_window() const;

  EarlyStopTrace finish() const;

 private:
  EarlyStopTrace trace_;
  std::size_t decreasing_ = 0;
};

// Replays a fixed accuracy sequence through EarlyStopper.
EarlyStopTrace replay_early_stopping(std::span<const double> accuracies, std::size_t window,
                                     std::size_t patience = 1);

}  // namespace assoc
