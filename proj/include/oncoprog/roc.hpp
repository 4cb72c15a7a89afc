#ifndef ONCOPROG_ROC_HPP
#define ONCOPROG_ROC_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "oncoprog/error.hpp"

namespace oncoprog {

struct roc_point {
  double fpr{};
  double tpr{};

  auto
  operator==(const roc_point &) const -> bool = default;
};

struct roc_curve {
  int class_id{};
  std::vector<roc_point> points;
  double auc{};

  auto
  operator==(const roc_curve &) const -> bool = default;
};

// Sweeps thresholds over the distinct scores in descending order, emitting one
// point per tie group, from (0,0) to (1,1). AUC is the trapezoidal area.
[[nodiscard]] inline auto
roc_points(std::span<const double> scores, const std::vector<bool> &labels, int class_id = 0)
  -> roc_curve {
  if (scores.size() != labels.size())
    throw error(errc::shape_mismatch, "scores and labels differ in length");
  const auto positives =
    static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const auto negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0)
    throw error(errc::one_class_only, "ROC needs both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](auto a, auto b) { return scores[a] > scores[b]; });

  roc_curve curve{class_id, {{0.0, 0.0}}, 0.0};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i)
      (labels[order[i]] ? tp : fp) += 1;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto &a = curve.points[i - 1];
    const auto &b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

}  // namespace oncoprog

#endif  // ONCOPROG_ROC_HPP
