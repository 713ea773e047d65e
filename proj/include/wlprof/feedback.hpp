#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlprof/classifier.hpp"
#include "wlprof/predictor.hpp"
#include "wlprof/profiles.hpp"

namespace wlprof {

enum class DeltaMode { kAbsolute, kRelative };

struct DeltaThreshold {
  double value = std::numeric_limits<double>::infinity();
  DeltaMode mode = DeltaMode::kAbsolute;
};

enum class WindowMode { kCount, kTime };

struct WindowSpec {
  WindowMode mode = WindowMode::kCount;
  std::int64_t size = 10000;  // events, or seconds in time mode
  // The violation clause is only evaluated once the window holds this many
  // events.
  std::size_t min_events = 100;
};

struct FeedbackConfig {
  std::map<std::string, DeltaThreshold> delta;
  std::optional<DeltaThreshold> default_delta;
  double tau_v = 0.1;
  double tau_o = 0.2;
  double tau_f = 0.5;
  double lambda = 1e-6;
  WindowSpec window;
  double tau_quality = 0.5;
  // Events skipped before the trigger is evaluated again after it fired.
  std::size_t cooldown_events = 500;

  void validate() const;
  // Threshold per feature; throws when a feature has none.
  std::map<std::string, DeltaThreshold> resolve_delta(const std::vector<std::string>& features) const;
};

struct ViolationResult {
  bool violated = false;
  std::map<std::string, bool> per_feature;
};

ViolationResult detect_violation(const BehaviorPrediction& prediction, const std::map<std::string, double>& actual,
                                 const std::map<std::string, DeltaThreshold>& delta);

struct WindowEvent {
  std::string id;
  bool violated = false;
  Timestamp t = 0;
};

enum class TriggerCause { kViolation, kFreshness, kOutlier };

std::string_view to_string(TriggerCause cause);

class FeedbackState {
 public:
  explicit FeedbackState(WindowSpec window) : window_spec_(window) {}

  // Starts from a freshly built profile set: its outliers and members seed
  // the outlier ledger, its groups seed last_update.
  static FeedbackState from_profiles(const ProfileSet& profiles, WindowSpec window);

  void push(WindowEvent event);
  void observe(bool outlier) {
    ++total_seen_;
    if (outlier) ++outliers_;
  }
  void reset_window() { window_.clear(); }
  void reset_ledger(std::size_t outliers, std::size_t total) {
    outliers_ = outliers;
    total_seen_ = total;
  }

  const std::deque<WindowEvent>& window() const noexcept { return window_; }
  const WindowSpec& window_spec() const noexcept { return window_spec_; }
  std::size_t outliers() const noexcept { return outliers_; }
  std::size_t total_seen() const noexcept { return total_seen_; }
  std::map<int, Timestamp>& last_update() noexcept { return last_update_; }
  const std::map<int, Timestamp>& last_update() const noexcept { return last_update_; }

  // Events inside the window at time t.
  std::vector<const WindowEvent*> windowed(Timestamp t) const;

 private:
  WindowSpec window_spec_;
  std::deque<WindowEvent> window_;
  std::size_t outliers_ = 0;
  std::size_t total_seen_ = 0;
  std::map<int, Timestamp> last_update_;
};

// Fraction of violated events in the window; nullopt when it is empty.
std::optional<double> violation_rate(const FeedbackState& state, Timestamp t);

double freshness(Timestamp last_update, Timestamp t, double lambda);
double freshness(const ProfileGroup& profile, Timestamp t, double lambda);

struct TriggerDecision {
  bool fire = false;
  std::set<TriggerCause> causes;
  std::optional<double> violation_rate;
  std::optional<double> min_freshness;
  double outlier_ratio = 0.0;
};

TriggerDecision update_trigger(const FeedbackState& state, const ProfileSet& profiles, const FeedbackConfig& cfg,
                               Timestamp t);

struct RegenConfig {
  GridSpec grid;
  GridOptions options;
  Hyperparams hyperparams;
};

struct TriggerRecord {
  std::size_t event_index = 0;
  Timestamp t = 0;
  std::set<TriggerCause> causes;
  std::optional<double> violation_rate;
  std::optional<double> min_freshness;
  double outlier_ratio = 0.0;
  std::optional<double> acquires_before;
  std::optional<double> acquires_after;
  bool adopted = false;
  std::string reason;
  std::size_t reclustered_size = 0;
  // Violations among stream events since the previous adoption (or start),
  // and after this adoption until the next one (or the end).
  std::size_t events_before = 0;
  std::size_t violations_before = 0;
  std::size_t events_after = 0;
  std::size_t violations_after = 0;
};

struct TimelineRow {
  std::size_t index = 0;
  Timestamp t = 0;
  std::string id;
  int label = -1;
  bool violated = false;
  bool outlier = false;
  std::optional<double> window_rate;
};

struct FeedbackRunReport {
  std::vector<TriggerRecord> triggers;
  std::vector<TimelineRow> timeline;
  std::size_t events = 0;
  std::size_t violations = 0;
  std::size_t adopted_updates = 0;
  std::size_t rejected_updates = 0;
  ProfileSet final_profiles;
  ClassifierModel final_model;

  std::string to_json_text() const;
  std::string timeline_csv() const;
};

struct FeedbackInputs {
  const Dataset& training;  // data the current profiles were built from
  const Dataset& stream;
  ClassifierModel model;
  ProfileSet profiles;
  FeedbackConfig config;
  RegenConfig regen;
  PredictionPolicy policy;
  std::vector<std::string> features;  // empty: every runtime feature
};

// Replays the stream in order. Without a timestamp column, event i happens
// at profiles.created_at + 1 + i.
FeedbackRunReport run_feedback(const FeedbackInputs& inputs);

}  // namespace wlprof
