#pragma once

#include <cmath>
#include <string>

namespace gsvr::model {

// Batch- or epoch-mean objective terms. total = pred_loss + alpha * (sum of
// the four KL terms).
struct LossBreakdown {
  double pred_loss = 0.0;
  double kl_user_post = 0.0;
  double kl_item_post = 0.0;
  double kl_user_anchor = 0.0;
  double kl_item_anchor = 0.0;
  double total = 0.0;

  double kl_sum() const { return kl_user_post + kl_item_post + kl_user_anchor + kl_item_anchor; }

  // Name of the first non-finite term, or empty.
  std::string first_non_finite() const {
    if (!std::isfinite(pred_loss)) return "loss.pred";
    if (!std::isfinite(kl_user_post)) return "loss.kl_user";
    if (!std::isfinite(kl_item_post)) return "loss.kl_item";
    if (!std::isfinite(kl_user_anchor)) return "loss.kl_anchor_user";
    if (!std::isfinite(kl_item_anchor)) return "loss.kl_anchor_item";
    if (!std::isfinite(total)) return "loss.total";
    return {};
  }

  LossBreakdown& operator+=(const LossBreakdown& o) {
    pred_loss += o.pred_loss;
    kl_user_post += o.kl_user_post;
    kl_item_post += o.kl_item_post;
    kl_user_anchor += o.kl_user_anchor;
    kl_item_anchor += o.kl_item_anchor;
    total += o.total;
    return *this;
  }
  LossBreakdown scaled(double f) const {
    return {pred_loss * f, kl_user_post * f, kl_item_post * f, kl_user_anchor * f, kl_item_anchor * f, total * f};
  }
};

}  // namespace gsvr::model
