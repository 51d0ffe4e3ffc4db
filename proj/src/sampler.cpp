#include "stereolab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stereolab/csv.hpp"
#include "stereolab/profiler.hpp"
#include "stereolab/rng.hpp"

namespace stereolab {

namespace {

// Absorbs representation error of products of decimal ratios with counts up
// to ~1e6 without ever moving a genuine non-tie across the rounding boundary.
constexpr double kTieSlack = 1e-9;

std::string cell_name(const Manifest& m, std::size_t l, std::size_t g) {
  return m.labels()[l] + "/" + m.groups()[g];
}

std::string ratio_text(double r) { return format_real(r); }

std::vector<std::vector<std::size_t>> train_counts(const Manifest& m) {
  std::vector<std::vector<std::size_t>> counts(m.labels().size(),
                                               std::vector<std::size_t>(m.groups().size()));
  for (std::size_t l = 0; l < m.labels().size(); ++l) {
    for (std::size_t g = 0; g < m.groups().size(); ++g) counts[l][g] = m.cell_count(l, g, Split::train);
  }
  return counts;
}

SamplePlan plan_stratified(const Manifest& m, double r) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw SamplingError("stratified ratio must be in [0, 1], got " + ratio_text(r));
  }
  SamplePlan p;
  p.keep = train_counts(m);
  for (std::size_t l = 0; l < p.keep.size(); ++l) {
    for (std::size_t g = 0; g < p.keep[l].size(); ++g) {
      const std::size_t n = p.keep[l][g];
      p.keep[l][g] = scaled_count(n, r);
      p.provenance.push_back("stratified " + cell_name(m, l, g) + ": " + std::to_string(n) + " x " +
                             ratio_text(r) + " -> " + std::to_string(p.keep[l][g]));
    }
  }
  return p;
}

SamplePlan plan_balanced(const Manifest& m) {
  const auto counts = train_counts(m);
  std::vector<std::string> empty;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    for (std::size_t g = 0; g < counts[l].size(); ++g) {
      if (counts[l][g] == 0) empty.push_back(cell_name(m, l, g));
    }
  }
  if (!empty.empty()) {
    std::string msg = "cannot balance: empty train cells:";
    for (const auto& e : empty) msg += " " + e;
    throw SamplingError(msg);
  }

  const DemographicProfile prof = profile(m, Split::train);
  const MinCell min = prof.min_cell();
  const std::uint64_t c = min.imbalance.count;
  const std::uint64_t s = min.imbalance.support;

  SamplePlan p;
  p.keep = counts;
  p.provenance.push_back("min imbalance " + cell_name(m, min.label, min.group) + " = " +
                         std::to_string(c) + "/" + std::to_string(s));
  std::vector<std::string> degenerate;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const std::uint64_t support = prof.support(l);
    // round_half_up(support * c / s) in exact integer arithmetic.
    const std::uint64_t target = (2 * support * c + s) / (2 * s);
    if (target == 0) degenerate.push_back(m.labels()[l]);
    for (std::size_t g = 0; g < counts[l].size(); ++g) {
      p.keep[l][g] = std::min<std::size_t>(counts[l][g], target);
      p.provenance.push_back("balanced " + cell_name(m, l, g) + ": " + std::to_string(counts[l][g]) +
                             " x (" + std::to_string(c) + "/" + std::to_string(s) + ")/(" +
                             std::to_string(counts[l][g]) + "/" + std::to_string(support) + ") -> " +
                             std::to_string(p.keep[l][g]));
    }
  }
  if (!degenerate.empty()) {
    std::string msg = "degenerate balance: target cell count rounds to 0 for labels:";
    for (const auto& d : degenerate) msg += " " + d;
    throw SamplingError(msg);
  }
  return p;
}

SamplePlan plan_biased(const Manifest& m, const Biased& spec) {
  const double b = spec.bias;
  if (!(b >= -1.0 && b <= 1.0)) throw SamplingError("bias must be in [-1, 1], got " + ratio_text(b));
  const auto tl = m.labels().index_of(spec.target_label);
  if (!tl) throw SamplingError("unknown target label '" + spec.target_label + "'");
  const auto tg = m.groups().index_of(spec.target_group);
  if (!tg) throw SamplingError("unknown target group '" + spec.target_group + "'");
  if (!is_balanced(m)) {
    throw SamplingError("biased subsampling requires a balanced input (cells within +-1 per label)");
  }

  SamplePlan p;
  p.keep = train_counts(m);
  const double compensation = 1.0 - std::abs(b) / 2.0;
  for (std::size_t l = 0; l < p.keep.size(); ++l) {
    const auto [lo, hi] = std::minmax_element(p.keep[l].begin(), p.keep[l].end());
    if (*lo != *hi) {
      p.provenance.push_back("note " + m.labels()[l] + ": cells differ by rounding residue; ratios "
                             "applied to actual cell sizes");
    }
    for (std::size_t g = 0; g < p.keep[l].size(); ++g) {
      double ratio = 1.0;
      if (l == *tl) {
        if (b < 0.0 && g == *tg) ratio = 1.0 + b;
        if (b > 0.0 && g != *tg) ratio = 1.0 - b;
      } else {
        ratio = compensation;
      }
      const std::size_t n = p.keep[l][g];
      p.keep[l][g] = scaled_count(n, ratio);
      p.provenance.push_back("biased " + cell_name(m, l, g) + ": " + std::to_string(n) + " x " +
                             ratio_text(ratio) + " -> " + std::to_string(p.keep[l][g]));
    }
  }
  return p;
}

}  // namespace

std::size_t round_half_up(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 0.5 + kTieSlack));
}

std::size_t scaled_count(std::size_t n, double ratio) {
  return std::min(n, round_half_up(ratio * static_cast<double>(n)));
}

bool is_balanced(const Manifest& m) {
  for (std::size_t l = 0; l < m.labels().size(); ++l) {
    std::size_t lo = static_cast<std::size_t>(-1);
    std::size_t hi = 0;
    for (std::size_t g = 0; g < m.groups().size(); ++g) {
      const std::size_t n = m.cell_count(l, g, Split::train);
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    if (hi - lo > 1) return false;
  }
  return true;
}

SamplePlan plan(const Manifest& manifest, const SubsetSpec& spec) {
  return std::visit(
      [&](const auto& v) -> SamplePlan {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Stratified>) {
          return plan_stratified(manifest, v.ratio);
        } else if constexpr (std::is_same_v<T, Balanced>) {
          return plan_balanced(manifest);
        } else {
          return plan_biased(manifest, v);
        }
      },
      spec.variant);
}

Manifest execute(const Manifest& manifest, const SamplePlan& p, std::uint64_t seed) {
  const auto& labels = manifest.labels();
  const auto& groups = manifest.groups();
  if (p.keep.size() != labels.size()) throw SamplingError("plan does not match manifest labels");

  const auto all = manifest.records();
  std::vector<SampleRecord> out;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (p.keep[l].size() != groups.size()) throw SamplingError("plan does not match manifest groups");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto cell = manifest.cell_indices(l, g, Split::train);
      const std::size_t k = p.keep[l][g];
      if (k > cell.size()) {
        throw SamplingError("plan keeps " + std::to_string(k) + " of " + std::to_string(cell.size()) +
                            " records in " + cell_name(manifest, l, g));
      }
      std::vector<std::size_t> order(cell.begin(), cell.end());
      Engine engine(SeedHasher(seed).add(labels[l]).add(groups[g]).value());
      partial_shuffle(std::span<std::size_t>(order), k, engine);
      for (std::size_t i = 0; i < k; ++i) out.push_back(all[order[i]]);
    }
  }
  for (const auto& r : all) {
    if (r.split == Split::test) out.push_back(r);
  }
  return manifest.with_records(std::move(out));
}

Manifest subsample(const Manifest& manifest, const SubsetSpec& spec) {
  return execute(manifest, plan(manifest, spec), spec.seed);
}

Manifest stratified_subsample(const Manifest& manifest, double ratio, std::uint64_t seed) {
  return subsample(manifest, {Stratified{ratio}, seed});
}

Manifest balanced_subsample(const Manifest& manifest, std::uint64_t seed) {
  return subsample(manifest, {Balanced{}, seed});
}

Manifest biased_subsample(const Manifest& balanced, std::string_view target_label,
                          std::string_view target_group, double bias, std::uint64_t seed) {
  return subsample(balanced,
                   {Biased{std::string(target_label), std::string(target_group), bias}, seed});
}

SubsetSpec parse_subset_spec(std::string_view text, std::uint64_t seed) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  std::vector<std::pair<std::string, std::string>> params;
  if (colon != std::string_view::npos) {
    for (const auto& kv : split_fields(text.substr(colon + 1))) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw SamplingError("malformed spec parameter '" + kv + "'");
      params.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
  }
  auto take = [&](std::string_view key) -> std::string {
    for (const auto& [k, v] : params) {
      if (k == key) return v;
    }
    throw SamplingError("spec '" + std::string(text) + "' is missing '" + std::string(key) + "'");
  };
  auto expect_params = [&](std::size_t n) {
    if (params.size() != n) throw SamplingError("unexpected parameters in spec '" + std::string(text) + "'");
  };
  try {
    if (kind == "stratified") {
      expect_params(1);
      return {Stratified{parse_real(take("r"))}, seed};
    }
    if (kind == "balanced") {
      expect_params(0);
      return {Balanced{}, seed};
    }
    if (kind == "biased") {
      expect_params(3);
      return {Biased{take("label"), take("group"), parse_real(take("b"))}, seed};
    }
  } catch (const FormatError& e) {
    throw SamplingError("spec '" + std::string(text) + "': " + e.what());
  }
  throw SamplingError("unknown subset spec '" + std::string(text) + "'");
}

std::string describe_plan(const Manifest& manifest, const SamplePlan& p) {
  std::ostringstream out;
  out << "label,group,current,keep\n";
  std::size_t before = 0;
  std::size_t after = 0;
  for (std::size_t l = 0; l < manifest.labels().size(); ++l) {
    for (std::size_t g = 0; g < manifest.groups().size(); ++g) {
      const std::size_t n = manifest.cell_count(l, g, Split::train);
      before += n;
      after += p.keep[l][g];
      out << manifest.labels()[l] << ',' << manifest.groups()[g] << ',' << n << ',' << p.keep[l][g]
          << '\n';
    }
  }
  out << "# train size " << before << " -> " << after << '\n';
  for (const auto& line : p.provenance) out << "# " << line << '\n';
  return out.str();
}

}  // namespace stereolab
