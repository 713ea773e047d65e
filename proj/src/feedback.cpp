#include "wlprof/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace wlprof {

using nlohmann::json;

void FeedbackConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(tau_v)) throw Error(ErrorCode::kInvalidArgument, "tau_v must be inside [0, 1]");
  if (!in_unit(tau_o)) throw Error(ErrorCode::kInvalidArgument, "tau_o must be inside [0, 1]");
  if (!in_unit(tau_f)) throw Error(ErrorCode::kInvalidArgument, "tau_f must be inside [0, 1]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::kInvalidArgument, "lambda must be positive");
  if (std::isnan(tau_quality)) throw Error(ErrorCode::kInvalidArgument, "tau_quality is NaN");
  if (window.size < 1) throw Error(ErrorCode::kInvalidArgument, "window size must be at least 1");
  auto check = [](const DeltaThreshold& d) {
    if (std::isnan(d.value) || d.value < 0.0) throw Error(ErrorCode::kInvalidArgument, "delta must be nonnegative");
  };
  for (const auto& [name, d] : delta) check(d);
  if (default_delta) check(*default_delta);
}

std::map<std::string, DeltaThreshold> FeedbackConfig::resolve_delta(const std::vector<std::string>& features) const {
  std::map<std::string, DeltaThreshold> out;
  for (const auto& f : features) {
    auto it = delta.find(f);
    if (it != delta.end())
      out[f] = it->second;
    else if (default_delta)
      out[f] = *default_delta;
    else
      throw Error(ErrorCode::kInvalidArgument, "no deviation threshold for feature '" + f + "'");
  }
  for (const auto& [name, d] : delta)
    if (!out.count(name)) throw Error(ErrorCode::kInvalidArgument, "deviation threshold for unknown feature '" + name + "'");
  return out;
}

ViolationResult detect_violation(const BehaviorPrediction& prediction, const std::map<std::string, double>& actual,
                                 const std::map<std::string, DeltaThreshold>& delta) {
  if (prediction.values.size() != actual.size() || prediction.values.size() != delta.size())
    throw Error(ErrorCode::kInvalidArgument, "prediction, actual and delta feature sets differ");
  ViolationResult out;
  for (const auto& [name, expected] : prediction.values) {
    auto a = actual.find(name);
    auto d = delta.find(name);
    if (a == actual.end() || d == delta.end())
      throw Error(ErrorCode::kInvalidArgument, "prediction, actual and delta feature sets differ");
    double dev = std::abs(a->second - expected);
    if (d->second.mode == DeltaMode::kRelative) dev /= std::max(std::abs(expected), kRelativeErrorFloor);
    const bool flag = dev > d->second.value;
    out.per_feature[name] = flag;
    out.violated = out.violated || flag;
  }
  return out;
}

std::string_view to_string(TriggerCause cause) {
  switch (cause) {
    case TriggerCause::kViolation:
      return "violation";
    case TriggerCause::kFreshness:
      return "freshness";
    case TriggerCause::kOutlier:
      return "outlier";
  }
  return "unknown";
}

FeedbackState FeedbackState::from_profiles(const ProfileSet& profiles, WindowSpec window) {
  FeedbackState s(window);
  s.reset_ledger(profiles.outlier_count, profiles.workload_count());
  for (const auto& g : profiles.groups) s.last_update_[g.label] = g.last_update;
  return s;
}

void FeedbackState::push(WindowEvent event) {
  window_.push_back(std::move(event));
  if (window_spec_.mode == WindowMode::kCount) {
    while (window_.size() > static_cast<std::size_t>(window_spec_.size)) window_.pop_front();
  } else {
    const Timestamp now = window_.back().t;
    while (!window_.empty() && window_.front().t <= now - window_spec_.size) window_.pop_front();
  }
}

std::vector<const WindowEvent*> FeedbackState::windowed(Timestamp t) const {
  std::vector<const WindowEvent*> out;
  for (const auto& e : window_) {
    if (e.t > t) continue;
    if (window_spec_.mode == WindowMode::kTime && e.t <= t - window_spec_.size) continue;
    out.push_back(&e);
  }
  if (window_spec_.mode == WindowMode::kCount && out.size() > static_cast<std::size_t>(window_spec_.size))
    out.erase(out.begin(), out.end() - window_spec_.size);
  return out;
}

std::optional<double> violation_rate(const FeedbackState& state, Timestamp t) {
  const auto events = state.windowed(t);
  if (events.empty()) return std::nullopt;
  const auto violated = std::count_if(events.begin(), events.end(), [](const WindowEvent* e) { return e->violated; });
  return static_cast<double>(violated) / static_cast<double>(events.size());
}

double freshness(Timestamp last_update, Timestamp t, double lambda) {
  if (t < last_update) throw Error(ErrorCode::kInvalidArgument, "freshness evaluated before the last update");
  if (!(lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be positive");
  return std::exp(-lambda * static_cast<double>(t - last_update));
}

double freshness(const ProfileGroup& profile, Timestamp t, double lambda) {
  return freshness(profile.last_update, t, lambda);
}

TriggerDecision update_trigger(const FeedbackState& state, const ProfileSet& profiles, const FeedbackConfig& cfg,
                               Timestamp t) {
  TriggerDecision d;
  if (state.windowed(t).size() >= std::max<std::size_t>(cfg.window.min_events, 1)) {
    d.violation_rate = violation_rate(state, t);
    if (*d.violation_rate > cfg.tau_v) d.causes.insert(TriggerCause::kViolation);
  }
  for (const auto& g : profiles.groups) {
    auto it = state.last_update().find(g.label);
    const Timestamp last = it != state.last_update().end() ? it->second : g.last_update;
    const double f = freshness(last, t, cfg.lambda);
    d.min_freshness = d.min_freshness ? std::min(*d.min_freshness, f) : f;
  }
  if (d.min_freshness && *d.min_freshness < cfg.tau_f) d.causes.insert(TriggerCause::kFreshness);
  if (state.total_seen() > 0) {
    d.outlier_ratio = static_cast<double>(state.outliers()) / static_cast<double>(state.total_seen());
    if (d.outlier_ratio > cfg.tau_o) d.causes.insert(TriggerCause::kOutlier);
  }
  d.fire = !d.causes.empty();
  return d;
}

namespace {

struct Rebuild {
  ProfileSet profiles;
  ClassifierModel model;
};

// Re-clusters D(t) and retrains; nullopt with a reason when nothing viable.
std::optional<Rebuild> rebuild(const Dataset& data, const RegenConfig& regen, Timestamp t, std::string& reason) {
  GridOptions options = regen.options;
  options.now = t;
  try {
    auto result = grid_search(data, regen.grid, options);
    auto [ts, vocab] = build_training_set(data, result.profiles);
    Rebuild out{std::move(result.profiles), train(ts, vocab, regen.hyperparams, options.seed)};
    return out;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoViableConfig || e.code() == ErrorCode::kEmptyProfileSet ||
        e.code() == ErrorCode::kTraining) {
      reason = e.what();
      return std::nullopt;
    }
    throw;
  }
}

json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

}  // namespace

FeedbackRunReport run_feedback(const FeedbackInputs& in) {
  if (in.stream.size() == 0) throw Error(ErrorCode::kInvalidArgument, "feedback stream is empty");
  in.config.validate();
  in.policy.validate();
  if (in.stream.schema_runtime() != in.training.schema_runtime() ||
      in.stream.schema_metadata() != in.training.schema_metadata())
    throw Error(ErrorCode::kSchema, "stream and training schemas differ");

  const std::vector<std::string> features = in.features.empty() ? in.stream.schema_runtime() : in.features;
  std::vector<std::size_t> columns;
  for (const auto& f : features) {
    auto idx = in.stream.runtime_index(f);
    if (!idx) throw Error(ErrorCode::kSchema, "stream has no runtime feature '" + f + "'");
    columns.push_back(*idx);
  }
  const auto delta = in.config.resolve_delta(features);
  const bool timed = in.stream.timestamp_column.has_value();

  FeedbackRunReport report;
  report.final_profiles = in.profiles;
  report.final_model = in.model;
  ProfileSet& profiles = report.final_profiles;
  ClassifierModel& model = report.final_model;
  FeedbackState state = FeedbackState::from_profiles(profiles, in.config.window);

  std::size_t cooldown = 0;
  std::size_t segment_events = 0, segment_violations = 0;
  std::optional<std::size_t> last_adopted;  // index into report.triggers

  for (std::size_t i = 0; i < in.stream.size(); ++i) {
    const Workload& w = in.stream[i];
    const Timestamp t = timed ? w.submitted_at : profiles.created_at + 1 + static_cast<Timestamp>(i);
    for (const auto& [label, last] : state.last_update())
      if (t < last)
        throw Error(ErrorCode::kInvalidArgument, "stream event '" + w.id + "' at t=" + std::to_string(t) +
                                                     " precedes the last update of profile " + std::to_string(label));

    const auto cls = classify_encoded(model, model.vocabulary.encode(in.stream, i));
    const ProfileGroup* group = profiles.find(cls.label);
    bool violated = true;  // a label without a profile has no expectation to meet
    if (group) {
      auto pred = predict(*group, features, in.policy);
      std::map<std::string, double> actual;
      for (std::size_t f = 0; f < features.size(); ++f) actual[features[f]] = w.runtime[columns[f]];
      violated = detect_violation(pred, actual, delta).violated;
    }
    const bool outlier = profiles.is_outlier(w.runtime);

    state.observe(outlier);
    state.push({w.id, violated, t});
    ++report.events;
    ++segment_events;
    if (violated) {
      ++report.violations;
      ++segment_violations;
    }
    report.timeline.push_back({i, t, w.id, cls.label, violated, outlier, violation_rate(state, t)});

    if (cooldown > 0) {
      --cooldown;
      continue;
    }
    const auto decision = update_trigger(state, profiles, in.config, t);
    if (!decision.fire) continue;

    TriggerRecord rec;
    rec.event_index = i;
    rec.t = t;
    rec.causes = decision.causes;
    rec.violation_rate = decision.violation_rate;
    rec.min_freshness = decision.min_freshness;
    rec.outlier_ratio = decision.outlier_ratio;
    if (profiles.quality) rec.acquires_before = profiles.quality->total;

    std::vector<std::size_t> seen(i + 1);
    for (std::size_t k = 0; k <= i; ++k) seen[k] = k;
    const Dataset data = in.training.concat(in.stream.subset(seen));
    rec.reclustered_size = data.size();

    std::string reason;
    auto rebuilt = rebuild(data, in.regen, t, reason);
    if (rebuilt && rebuilt->profiles.quality) rec.acquires_after = rebuilt->profiles.quality->total;
    if (!rebuilt) {
      rec.reason = "re-clustering failed: " + reason;
    } else if (!(rebuilt->profiles.quality && rebuilt->profiles.quality->total > in.config.tau_quality)) {
      rec.reason = "ACQUIRES not above tau_quality";
    } else {
      rec.adopted = true;
      rec.reason = "adopted";
      profiles = std::move(rebuilt->profiles);
      model = std::move(rebuilt->model);
      state.last_update().clear();
      for (const auto& g : profiles.groups) state.last_update()[g.label] = t;
      state.reset_ledger(profiles.outlier_count, profiles.workload_count());
      state.reset_window();
    }
    cooldown = in.config.cooldown_events;

    if (rec.adopted) {
      rec.events_before = segment_events;
      rec.violations_before = segment_violations;
      if (last_adopted) {
        auto& prev = report.triggers[*last_adopted];
        prev.events_after = segment_events;
        prev.violations_after = segment_violations;
      }
      segment_events = 0;
      segment_violations = 0;
      last_adopted = report.triggers.size();
      ++report.adopted_updates;
    } else {
      ++report.rejected_updates;
    }
    report.triggers.push_back(std::move(rec));
  }
  if (last_adopted) {
    auto& prev = report.triggers[*last_adopted];
    prev.events_after = segment_events;
    prev.violations_after = segment_violations;
  }
  return report;
}

std::string FeedbackRunReport::to_json_text() const {
  json doc;
  doc["format"] = "wlprof-feedback-report";
  doc["version"] = 1;
  doc["events"] = events;
  doc["violations"] = violations;
  doc["adopted_updates"] = adopted_updates;
  doc["rejected_updates"] = rejected_updates;
  json ts = json::array();
  for (const auto& r : triggers) {
    json causes = json::array();
    for (auto c : r.causes) causes.push_back(std::string(to_string(c)));
    ts.push_back({{"event_index", r.event_index},
                  {"t", r.t},
                  {"causes", causes},
                  {"violation_rate", optional_number(r.violation_rate)},
                  {"min_freshness", optional_number(r.min_freshness)},
                  {"outlier_ratio", r.outlier_ratio},
                  {"acquires_before", optional_number(r.acquires_before)},
                  {"acquires_after", optional_number(r.acquires_after)},
                  {"adopted", r.adopted},
                  {"reason", r.reason},
                  {"reclustered_size", r.reclustered_size},
                  {"events_before", r.events_before},
                  {"violations_before", r.violations_before},
                  {"events_after", r.events_after},
                  {"violations_after", r.violations_after}});
  }
  doc["triggers"] = ts;
  doc["final_profile_count"] = final_profiles.groups.size();
  return doc.dump(1) + "\n";
}

std::string FeedbackRunReport::timeline_csv() const {
  std::string out = "index,t,workload,profile,violated,outlier,window_violation_rate\n";
  for (const auto& r : timeline) {
    out += std::to_string(r.index) + "," + std::to_string(r.t) + "," + r.id + "," + std::to_string(r.label) + "," +
           (r.violated ? "1" : "0") + "," + (r.outlier ? "1" : "0") + "," +
           (r.window_rate ? format_double(*r.window_rate) : std::string()) + "\n";
  }
  return out;
}

}  // namespace wlprof
