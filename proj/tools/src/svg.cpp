#include "assoc/cli/svg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace assoc::cli {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
constexpr double kPanel = 360.0;
constexpr double kMargin = 30.0;

Eigen::MatrixXd to_eigen(const Tensor2& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t(r, c);
  return m;
}

const char* color(int label) {
  const int n = static_cast<int>(std::size(kPalette));
  return kPalette[((label % n) + n) % n];
}

struct Projected {
  std::vector<std::pair<double, double>> novel, related;
};

Projected project(const EmbeddingSet& s, const Eigen::RowVectorXd& mean,
                  const Eigen::MatrixXd& axes) {
  Projected p;
  auto run = [&](const Tensor2& t, auto& out) {
    if (t.rows() == 0) return;
    const Eigen::MatrixXd xy = (to_eigen(t).rowwise() - mean) * axes;
    for (Eigen::Index i = 0; i < xy.rows(); ++i) out.emplace_back(xy(i, 0), xy(i, 1));
  };
  run(s.novel, p.novel);
  run(s.related, p.related);
  return p;
}

Tensor2 stack_all(const EmbeddingSet& a, const EmbeddingSet& b) {
  const std::size_t cols = std::max({a.novel.cols(), a.related.cols(), b.novel.cols()});
  Tensor2 out(a.novel.rows() + a.related.rows() + b.novel.rows() + b.related.rows(), cols);
  std::size_t r = 0;
  for (const Tensor2* t : {&a.novel, &a.related, &b.novel, &b.related})
    for (std::size_t i = 0; i < t->rows(); ++i, ++r)
      std::copy(t->row(i).begin(), t->row(i).end(), out.row(r).begin());
  return out;
}

}  // namespace

Tensor2 principal_axes(const Tensor2& rows) {
  Tensor2 out(rows.cols(), 2);
  if (rows.rows() == 0 || rows.cols() == 0) return out;
  const Eigen::MatrixXd x = to_eigen(rows);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last two columns.
  const Eigen::Index d = cov.cols();
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, d); ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
    // Sign convention: largest-magnitude component positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (Eigen::Index i = 0; i < d; ++i) out(static_cast<std::size_t>(i), k) = v(i);
  }
  return out;
}

std::string render_alignment_svg(const EmbeddingSet& before, const EmbeddingSet& after) {
  const Tensor2 all = stack_all(before, after);
  const Eigen::RowVectorXd mean = to_eigen(all).colwise().mean();
  const Eigen::MatrixXd axes = to_eigen(principal_axes(all));
  const Projected panels[2] = {project(before, mean, axes), project(after, mean, axes)};

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const auto& p : panels)
    for (const auto* pts : {&p.novel, &p.related})
      for (const auto& [x, y] : *pts) {
        lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
      }
  if (!(hi_x > lo_x)) lo_x -= 1, hi_x += 1;
  if (!(hi_y > lo_y)) lo_y -= 1, hi_y += 1;
  const double inner = kPanel - 2 * kMargin;
  auto sx = [&](double x, int panel) {
    return panel * kPanel + kMargin + (x - lo_x) / (hi_x - lo_x) * inner;
  };
  auto sy = [&](double y) { return kPanel - kMargin - (y - lo_y) / (hi_y - lo_y) * inner + 20; };

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * kPanel << "\" height=\""
      << kPanel + 20 << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const char* titles[2] = {"before alignment", "after alignment"};
  const std::vector<int>* novel_labels[2] = {&before.novel_labels, &after.novel_labels};
  const std::vector<int>* related_labels[2] = {&before.related_labels, &after.related_labels};
  for (int k = 0; k < 2; ++k) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"18\" text-anchor=\"middle\">%s</text>\n"
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                  "stroke=\"#999\"/>\n",
                  k * kPanel + kPanel / 2, titles[k], k * kPanel + kMargin / 2, kMargin / 2 + 20,
                  kPanel - kMargin, kPanel - kMargin);
    svg << buf;
    // Related points first so novel markers stay visible on top.
    for (std::size_t i = 0; i < panels[k].related.size(); ++i) {
      const auto [x, y] = panels[k].related[i];
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"4\" height=\"4\" fill=\"none\" "
                    "stroke=\"%s\" stroke-opacity=\"0.5\"/>\n",
                    sx(x, k) - 2, sy(y) - 2, color((*related_labels[k])[i]));
      svg << buf;
    }
    for (std::size_t i = 0; i < panels[k].novel.size(); ++i) {
      const auto [x, y] = panels[k].novel[i];
      std::snprintf(buf, sizeof buf,
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\" stroke=\"black\"/>\n",
                    sx(x, k), sy(y), color((*novel_labels[k])[i]));
      svg << buf;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace assoc::cli
