#include "assoc/preset.hpp"

namespace assoc {

Preset synthetic_preset() {
  Preset p;
  p.model.hidden = {32};
  p.model.embedding_dim = 16;
  // 2000 base examples converge within tens of epochs; a 50-epoch window
  // would mostly measure overfitting.
  p.train.window = 20;
  p.train.max_epochs = 200;
  // Enough Adam steps for the fine-tuned baseline to converge; matches the
  // classifier updates the alignment variants receive.
  p.train.finetune_steps = 300;
  p.train.related_per_class = 3;
  p.eval.way = 5;
  p.eval.shot = 5;
  return p;
}

}  // namespace assoc
