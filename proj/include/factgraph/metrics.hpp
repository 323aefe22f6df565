#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace factgraph {

enum class Label : int { Factual = 1, NonFactual = 0 };

struct MetricsError : std::runtime_error {
  explicit MetricsError(const std::string& m) : std::runtime_error(m) {}
};

struct CorrelationBlock {
  double pearson_rho = 0.0;
  double pearson_p = 1.0;
  double spearman_r = 0.0;
  double spearman_p = 1.0;
  bool partial = false;
};

struct MetricsReport {
  double bacc = 0.0;
  double micro_f1 = 0.0;
  double recall_factual = 0.0;
  double recall_nonfactual = 0.0;
  // confusion counts, prediction x truth
  long tp = 0, fp = 0, tn = 0, fn = 0;  // NonFactual is the positive class
  std::optional<CorrelationBlock> correlation;

  std::string to_text() const;
};

// (recall over Factual + recall over NonFactual) / 2; throws MissingClass
// via MetricsError when a class has no true instances.
double bacc(const std::vector<Label>& predictions,
            const std::vector<Label>& labels);

// Micro-averaged F1 over both classes; equals accuracy for single-label
// binary classification.
double micro_f1(const std::vector<Label>& predictions,
                const std::vector<Label>& labels);

MetricsReport classification_report(const std::vector<Label>& predictions,
                                    const std::vector<Label>& labels);

// (coefficient, p-value); p-values use the t-distribution approximation.
std::pair<double, double> pearson(const std::vector<double>& x,
                                  const std::vector<double>& y);
std::pair<double, double> spearman(const std::vector<double>& x,
                                   const std::vector<double>& y);

// Residualizes x and y against the covariate columns by least squares and
// correlates the residuals; Spearman variant rank-transforms first. The
// covariate matrix gets an implicit intercept column.
std::pair<double, double> partial_pearson(
    const std::vector<double>& x, const std::vector<double>& y,
    const std::vector<std::vector<double>>& covariates);
std::pair<double, double> partial_spearman(
    const std::vector<double>& x, const std::vector<double>& y,
    const std::vector<std::vector<double>>& covariates);

std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace factgraph
