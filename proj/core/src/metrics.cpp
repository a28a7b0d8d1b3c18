#include <cmath>
#include <cstdio>
#include <ostream>

#include "graphreason/engine.hpp"
#include "graphreason/error.hpp"

namespace graphreason {

namespace {

struct Confusion {
  std::vector<long> tp, fp, fn, support;
  long correct = 0;
  long total = 0;
  long unmatched = 0;

  explicit Confusion(std::size_t classes)
      : tp(classes, 0), fp(classes, 0), fn(classes, 0), support(classes, 0) {}

  void add(int gold, const std::optional<int>& predicted) {
    ++total;
    ++support[gold];
    if (!predicted) {
      // Unmatched answers count incorrect: a false negative for the gold
      // class and a false positive for nothing.
      ++unmatched;
      ++fn[gold];
      return;
    }
    if (*predicted == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fn[gold];
      ++fp[*predicted];
    }
  }
};

std::vector<ClassMetrics> class_metrics(const Confusion& confusion) {
  std::vector<ClassMetrics> metrics(confusion.tp.size());
  for (std::size_t c = 0; c < confusion.tp.size(); ++c) {
    const double tp = static_cast<double>(confusion.tp[c]);
    const double fp = static_cast<double>(confusion.fp[c]);
    const double fn = static_cast<double>(confusion.fn[c]);
    ClassMetrics& m = metrics[c];
    m.support = confusion.support[c];
    m.precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    m.recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  return metrics;
}

double macro_f1(const std::vector<ClassMetrics>& metrics) {
  if (metrics.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : metrics) sum += m.f1;
  return sum / static_cast<double>(metrics.size());
}

}  // namespace

SeedMetrics compute_seed_metrics(
    const std::vector<int>& gold,
    const std::vector<std::optional<int>>& predicted, std::size_t class_count,
    std::uint64_t seed) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorKind::Dimension, "gold/prediction lengths differ");
  }
  if (gold.empty()) {
    throw Error(ErrorKind::Validation, "metrics over an empty set");
  }
  Confusion confusion(class_count);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= class_count) {
      throw Error(ErrorKind::Validation, "gold label out of range");
    }
    if (predicted[i] &&
        (*predicted[i] < 0 ||
         static_cast<std::size_t>(*predicted[i]) >= class_count)) {
      throw Error(ErrorKind::Validation, "predicted label out of range");
    }
    confusion.add(gold[i], predicted[i]);
  }
  SeedMetrics metrics;
  metrics.seed = seed;
  metrics.per_class = class_metrics(confusion);
  metrics.accuracy = static_cast<double>(confusion.correct) /
                     static_cast<double>(confusion.total);
  metrics.macro_f1 = macro_f1(metrics.per_class);
  metrics.unmatched = confusion.unmatched;
  return metrics;
}

MetricsReport aggregate_metrics(std::vector<SeedMetrics> per_seed,
                                std::size_t class_count) {
  if (per_seed.empty()) {
    throw Error(ErrorKind::Validation, "no per-seed metrics to aggregate");
  }
  MetricsReport report;
  const double n = static_cast<double>(per_seed.size());

  auto mean_std = [&](auto pick) {
    double mean = 0.0;
    for (const auto& s : per_seed) mean += pick(s);
    mean /= n;
    double var = 0.0;
    for (const auto& s : per_seed) {
      const double d = pick(s) - mean;
      var += d * d;
    }
    return std::make_pair(mean, std::sqrt(var / n));
  };
  std::tie(report.accuracy_mean, report.accuracy_std) =
      mean_std([](const SeedMetrics& s) { return s.accuracy; });
  std::tie(report.macro_f1_mean, report.macro_f1_std) =
      mean_std([](const SeedMetrics& s) { return s.macro_f1; });

  // Pool class-level precision/recall by averaging over seeds, weighted
  // equally (each seed evaluates the same split size).
  report.per_class.assign(class_count, ClassMetrics{});
  for (const auto& seed : per_seed) {
    report.unmatched_total += seed.unmatched;
    for (std::size_t c = 0; c < class_count && c < seed.per_class.size(); ++c) {
      report.per_class[c].precision += seed.per_class[c].precision / n;
      report.per_class[c].recall += seed.per_class[c].recall / n;
      report.per_class[c].f1 += seed.per_class[c].f1 / n;
      report.per_class[c].support += seed.per_class[c].support;
    }
  }
  report.per_seed = std::move(per_seed);
  return report;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "seed,accuracy,macro_f1,unmatched\n";
  char line[128];
  for (const auto& seed : report.per_seed) {
    std::snprintf(line, sizeof(line), "%llu,%.6f,%.6f,%ld\n",
                  static_cast<unsigned long long>(seed.seed), seed.accuracy,
                  seed.macro_f1, seed.unmatched);
    out << line;
  }
  std::snprintf(line, sizeof(line), "mean,%.6f,%.6f,%ld\n",
                report.accuracy_mean, report.macro_f1_mean,
                report.unmatched_total);
  out << line;
  std::snprintf(line, sizeof(line), "std,%.6f,%.6f,\n", report.accuracy_std,
                report.macro_f1_std);
  out << line;
}

std::string format_metrics_table(const MetricsReport& report,
                                 const std::vector<std::string>& label_names) {
  std::string table;
  char line[256];
  table += "seed       accuracy   macro-F1   unmatched\n";
  for (const auto& seed : report.per_seed) {
    std::snprintf(line, sizeof(line), "%-10llu %.4f     %.4f     %ld\n",
                  static_cast<unsigned long long>(seed.seed), seed.accuracy,
                  seed.macro_f1, seed.unmatched);
    table += line;
  }
  std::snprintf(line, sizeof(line),
                "mean       %.4f     %.4f\nstd        %.4f     %.4f\n",
                report.accuracy_mean, report.macro_f1_mean,
                report.accuracy_std, report.macro_f1_std);
  table += line;
  table += "\nclass                          precision  recall  f1      support\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const std::string name =
        c < label_names.size() ? label_names[c] : "class " + std::to_string(c);
    std::snprintf(line, sizeof(line), "%-30.30s %.4f     %.4f  %.4f  %ld\n",
                  name.c_str(), report.per_class[c].precision,
                  report.per_class[c].recall, report.per_class[c].f1,
                  report.per_class[c].support);
    table += line;
  }
  return table;
}

}  // namespace graphreason
