#include "oaudit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "oaudit/errors.hpp"
#include "oaudit/rng.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

namespace {

const char* kToxicityTypes[] = {"toxicity", "severe_toxicity", "identity_attack",
                                "insult",   "obscenity",       "threat"};
const double kToxicityFrequency[] = {0.12, 0.01, 0.05, 0.06, 0.03, 0.02};

constexpr double kNoiseSigma = 0.08;
constexpr std::size_t kTopicCount = 160;
constexpr std::size_t kFillerCount = 40;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

std::string synthetic_group_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "group%02zu", index);
  return std::string(buf);
}

DatasetTable generate_synthetic(std::size_t n, std::size_t n_groups, const PlantedSpec& planted,
                                std::uint64_t seed) {
  if (n_groups < 2) fail(errc::config, "synthetic: need at least two demographic groups");
  if (!(planted.prevalence > 0.0 && planted.prevalence < 1.0)) {
    fail(errc::config, "synthetic: planted prevalence must be in (0,1)");
  }
  if (planted.prevalence * static_cast<double>(n) < 20.0) {
    fail(errc::config, "synthetic: planted group would have under 20 expected rows (" +
                           format_double(planted.prevalence * static_cast<double>(n)) + ")");
  }
  if (!(planted.inflation > 0.0)) fail(errc::config, "synthetic: inflation must be > 0");

  std::size_t planted_idx = n_groups;
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (synthetic_group_name(g) == planted.group) planted_idx = g;
  }
  if (planted_idx == n_groups) {
    fail(errc::config, "synthetic: planted group '" + planted.group + "' is not one of the " +
                           std::to_string(n_groups) + " generated groups");
  }

  // Membership profiles: no identities, one identity, a handful of common
  // pairs, or the planted group alone. Drawing whole profiles (rather than
  // independent per-group coins) keeps the demographic space free of a long
  // tail of accidental rare combinations, so the planted group is the one
  // genuinely rare pattern.
  struct Profile {
    double weight;
    std::vector<std::size_t> groups;
  };
  std::vector<Profile> profiles;
  profiles.push_back({0.14, {}});
  profiles.push_back({planted.prevalence, {planted_idx}});
  std::vector<std::size_t> others;
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (g != planted_idx) others.push_back(g);
  }
  double pair_total = 0.0;
  if (others.size() >= 4) {
    const std::size_t n_pairs = std::min<std::size_t>(4, others.size() / 2);
    for (std::size_t p = 0; p < n_pairs; ++p) {
      profiles.push_back({0.04, {others[2 * p], others[2 * p + 1]}});
      pair_total += 0.04;
    }
  }
  const double singles_total = 1.0 - 0.14 - planted.prevalence - pair_total;
  if (singles_total <= 0.0) {
    fail(errc::config, "synthetic: planted prevalence too large for the profile mix");
  }
  for (std::size_t g : others) {
    profiles.push_back({singles_total / static_cast<double>(others.size()), {g}});
  }
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& p : profiles) {
    acc += p.weight;
    cumulative.push_back(acc);
  }

  const std::size_t n_types = std::size(kToxicityTypes);
  std::vector<AttributeChannel> schema;
  for (std::size_t t = 0; t < n_types; ++t) {
    schema.push_back({kToxicityTypes[t], ChannelKind::toxicity_annotation, "", ""});
  }
  for (std::size_t g = 0; g < n_groups; ++g) {
    schema.push_back({synthetic_group_name(g), ChannelKind::demographic_annotation, "", ""});
  }
  for (std::size_t t = 0; t < n_types; ++t) {
    schema.push_back({score_channel_name(kSyntheticModelId, kToxicityTypes[t]), ChannelKind::model_score,
                      kSyntheticModelId, kToxicityTypes[t]});
  }

  std::vector<std::vector<double>> columns(schema.size(), std::vector<double>(n, 0.0));
  std::vector<std::int64_t> ids(n);
  std::vector<std::string> texts(n);

  for (std::size_t r = 0; r < n; ++r) {
    ids[r] = static_cast<std::int64_t>(r);
    Rng rng = Rng::keyed(seed, "row:" + std::to_string(r));

    // Demographic decimals. The planted channel is hard 0/1 so the planted
    // signal lives purely in the demographic space; other channels carry
    // soft annotator-average values.
    const double draw = rng.uniform() * acc;
    std::size_t profile_idx = 0;
    while (profile_idx + 1 < cumulative.size() && draw >= cumulative[profile_idx]) ++profile_idx;
    std::vector<int> member(n_groups, 0);
    for (std::size_t g : profiles[profile_idx].groups) member[g] = 1;
    for (std::size_t g = 0; g < n_groups; ++g) {
      double v;
      if (g == planted_idx) {
        v = member[g] ? 1.0 : 0.0;
      } else if (member[g]) {
        v = rng.bernoulli(0.9) ? 1.0 : 0.5 + 0.5 * rng.uniform();
      } else {
        v = rng.bernoulli(0.97) ? 0.0 : 0.5 * rng.uniform() * 0.98;
      }
      columns[n_types + g][r] = v;
    }
    const bool is_planted = member[planted_idx] == 1;

    // Ground truth per toxicity type.
    for (std::size_t t = 0; t < n_types; ++t) {
      double v;
      if (rng.bernoulli(kToxicityFrequency[t])) {
        v = 0.5 + 0.5 * rng.uniform();
      } else {
        v = 0.4 * rng.uniform();
      }
      columns[t][r] = v;
    }

    // Simulated model scores: truth plus Gaussian noise, inflated on the
    // planted group's rows.
    const double sigma = kNoiseSigma * (is_planted ? planted.inflation : 1.0);
    for (std::size_t t = 0; t < n_types; ++t) {
      columns[n_types + n_groups + t][r] = clamp01(columns[t][r] + sigma * rng.gaussian());
    }

    // Text: filler tokens plus mentions of the row's identities plus one or
    // two topic tokens with a heavy-tailed index, so rare topics and rare
    // identities both produce unusual vocabulary.
    std::string text = "user comment";
    const std::size_t fillers = 4 + rng.below(7);
    for (std::size_t w = 0; w < fillers; ++w) {
      const std::size_t f = static_cast<std::size_t>(
          std::floor(static_cast<double>(kFillerCount) * std::pow(rng.uniform(), 1.6)));
      text += " word" + std::to_string(std::min(f, kFillerCount - 1));
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (member[g] && rng.bernoulli(0.85)) text += " " + synthetic_group_name(g);
    }
    const std::size_t topics = 1 + rng.below(2);
    for (std::size_t w = 0; w < topics; ++w) {
      const std::size_t topic = static_cast<std::size_t>(
          std::floor(static_cast<double>(kTopicCount) * std::pow(rng.uniform(), 2.2)));
      text += " topic" + std::to_string(std::min(topic, kTopicCount - 1));
    }
    texts[r] = std::move(text);
  }

  return DatasetTable::from_columns(std::move(ids), std::move(texts), std::move(schema), std::move(columns));
}

}  // namespace oaudit
