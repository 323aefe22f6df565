#include "factgraph/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace factgraph {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw MetricsError(std::string(what) + ": length mismatch");
  if (a == 0) throw MetricsError(std::string(what) + ": empty input");
}

// regularized incomplete beta via continued fraction (Lentz)
double betacf(double a, double b, double x) {
  const int max_iter = 200;
  const double eps = 3e-14, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
              a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// two-sided p-value for correlation r with df degrees of freedom
double corr_p_value(double r, double df) {
  if (df <= 0.0) return 1.0;
  double r2 = std::min(r * r, 1.0 - 1e-15);
  double t2 = r2 * df / (1.0 - r2);
  // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
  return incbeta(df / 2.0, 0.5, df / (df + t2));
}

std::pair<double, double> pearson_core(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       double df) {
  const std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw MetricsError("ZeroVariance: correlation input has zero variance");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, corr_p_value(r, df)};
}

std::vector<double> residualize(const std::vector<double>& v,
                                const std::vector<std::vector<double>>& cov) {
  const std::size_t n = v.size();
  const std::size_t k = cov.size();
  Eigen::MatrixXd X(n, k + 1);
  for (std::size_t i = 0; i < n; ++i) X(i, 0) = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (cov[j].size() != n)
      throw MetricsError("partial correlation: covariate length mismatch");
    for (std::size_t i = 0; i < n; ++i) X(i, j + 1) = cov[j][i];
  }
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw MetricsError("RankDeficient: covariate matrix is rank deficient");
  Eigen::VectorXd yv(n);
  for (std::size_t i = 0; i < n; ++i) yv(i) = v[i];
  Eigen::VectorXd beta = qr.solve(yv);
  Eigen::VectorXd res = yv - X * beta;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = res(i);
  return out;
}

std::pair<double, double> partial_core(
    const std::vector<double>& x, const std::vector<double>& y,
    const std::vector<std::vector<double>>& cov) {
  check_lengths(x.size(), y.size(), "partial correlation");
  // constant columns duplicate the implicit intercept; absorb them
  std::vector<std::vector<double>> kept;
  for (const auto& c : cov) {
    bool constant = true;
    for (double v : c)
      if (v != c.front()) {
        constant = false;
        break;
      }
    if (!constant) kept.push_back(c);
  }
  if (x.size() < kept.size() + 3)
    throw MetricsError("partial correlation: too few samples");
  auto rx = residualize(x, kept);
  auto ry = residualize(y, kept);
  double df = static_cast<double>(x.size()) - 2.0 -
              static_cast<double>(kept.size());
  return pearson_core(rx, ry, df);
}

}  // namespace

double bacc(const std::vector<Label>& predictions,
            const std::vector<Label>& labels) {
  check_lengths(predictions.size(), labels.size(), "bacc");
  long correct_f = 0, total_f = 0, correct_nf = 0, total_nf = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::Factual) {
      ++total_f;
      if (predictions[i] == Label::Factual) ++correct_f;
    } else {
      ++total_nf;
      if (predictions[i] == Label::NonFactual) ++correct_nf;
    }
  }
  if (total_f == 0 || total_nf == 0)
    throw MetricsError("MissingClass: a class has zero true instances");
  return 0.5 * (static_cast<double>(correct_f) / total_f +
                static_cast<double>(correct_nf) / total_nf);
}

double micro_f1(const std::vector<Label>& predictions,
                const std::vector<Label>& labels) {
  check_lengths(predictions.size(), labels.size(), "micro_f1");
  long correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  // micro-averaged over both classes; for single-label binary data the
  // micro TP sum equals the number of correct predictions
  return static_cast<double>(correct) / predictions.size();
}

MetricsReport classification_report(const std::vector<Label>& predictions,
                                    const std::vector<Label>& labels) {
  MetricsReport r;
  check_lengths(predictions.size(), labels.size(), "classification_report");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool pos_true = labels[i] == Label::NonFactual;
    bool pos_pred = predictions[i] == Label::NonFactual;
    if (pos_true && pos_pred) ++r.tp;
    if (!pos_true && pos_pred) ++r.fp;
    if (!pos_true && !pos_pred) ++r.tn;
    if (pos_true && !pos_pred) ++r.fn;
  }
  r.bacc = bacc(predictions, labels);
  r.micro_f1 = micro_f1(predictions, labels);
  r.recall_nonfactual =
      r.tp + r.fn > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.recall_factual =
      r.tn + r.fp > 0 ? static_cast<double>(r.tn) / (r.tn + r.fp) : 0.0;
  return r;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "bacc              " << bacc << "\n"
     << "micro_f1          " << micro_f1 << "\n"
     << "recall_factual    " << recall_factual << "\n"
     << "recall_nonfactual " << recall_nonfactual << "\n"
     << "confusion         tp=" << tp << " fp=" << fp << " tn=" << tn
     << " fn=" << fn << " (positive class: non_factual)\n";
  if (correlation) {
    os << (correlation->partial ? "partial_" : "") << "pearson  "
       << correlation->pearson_rho << " (p=" << correlation->pearson_p << ")\n"
       << (correlation->partial ? "partial_" : "") << "spearman "
       << correlation->spearman_r << " (p=" << correlation->spearman_p << ")\n";
  }
  return os.str();
}

std::pair<double, double> pearson(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  check_lengths(x.size(), y.size(), "pearson");
  if (x.size() < 3) throw MetricsError("pearson: need at least 3 points");
  return pearson_core(x, y, static_cast<double>(x.size()) - 2.0);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::pair<double, double> spearman(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  check_lengths(x.size(), y.size(), "spearman");
  if (x.size() < 3) throw MetricsError("spearman: need at least 3 points");
  return pearson_core(average_ranks(x), average_ranks(y),
                      static_cast<double>(x.size()) - 2.0);
}

std::pair<double, double> partial_pearson(
    const std::vector<double>& x, const std::vector<double>& y,
    const std::vector<std::vector<double>>& covariates) {
  return partial_core(x, y, covariates);
}

std::pair<double, double> partial_spearman(
    const std::vector<double>& x, const std::vector<double>& y,
    const std::vector<std::vector<double>>& covariates) {
  std::vector<std::vector<double>> ranked;
  for (const auto& c : covariates) ranked.push_back(average_ranks(c));
  return partial_core(average_ranks(x), average_ranks(y), ranked);
}

}  // namespace factgraph
