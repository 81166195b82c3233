#include "ackscope/simulation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "ackscope/errors.hpp"

namespace ackscope {

using nlohmann::json;

AccessLink Scenario::link_for(LinkTech tech) const {
  if (auto it = link_presets.find(tech); it != link_presets.end()) return it->second;
  return AccessLink::preset(tech);
}

namespace {

bool needs_conversation(ProbeKind k) {
  return k == ProbeKind::Reaction || k == ProbeKind::SelfReaction || k == ProbeKind::RemoveReaction ||
         k == ProbeKind::Edit || k == ProbeKind::Delete;
}

ProbeContext context_for(const Scenario& sc, PlatformKind os) {
  ProbeContext ctx;
  ctx.existing_conversation = sc.has_conversation();
  ctx.reacts_to_own_message = false;
  ctx.target_platform = os;
  return ctx;
}

}  // namespace

namespace {

[[noreturn]] void fail(const std::string& m) { throw ValidationError(m); }

}  // namespace

void Scenario::validate_header() const {
  if (version != 1) fail("unsupported scenario version " + std::to_string(version));
  if (end_at <= 0) fail("scenario end must be after the epoch");
  policy.validate();
  topology.validate();
  mitigations.validate();
  if (attacker.account == victim.account) fail("attacker and victim must be distinct accounts");
  if (attacker.type == AttackerType::CreepyCompanion && attacker.prior_messages < 1) {
    fail("a creepy companion needs a conversation with at least one message");
  }
  if (attacker.type == AttackerType::SpookyStranger && attacker.prior_messages != 0) {
    fail("a spooky stranger has no prior conversation (prior_messages must be 0)");
  }
  if (attacker.limiter) attacker.limiter->validate();
  if (victim.devices.empty()) fail("victim has no devices");
  if (victim.devices.front().registered_at > 0) fail("the victim's main device must be registered at the start");
  if (victim.devices.front().index != policy.main_device_index) {
    fail("the main device index for " + std::string(to_string(policy.name)) + " is " +
         std::to_string(policy.main_device_index));
  }
}

void Scenario::validate_device(std::size_t i) const {
  const auto& d = victim.devices.at(i);
  const std::string where = "device " + std::to_string(d.index) + ": ";
  if (d.index < 0) fail(where + "index must be >= 0");
  if (i > 0) {
    const auto& prev = victim.devices[i - 1];
    if (d.index <= prev.index) fail(where + "device indices must be strictly increasing");
    if (d.registered_at < prev.registered_at) {
      fail(where + "registered before a device with a lower index (indices auto-increment)");
    }
  }
  if (d.removed_at && *d.removed_at <= d.registered_at) fail(where + "removed before it was registered");
  if (d.battery_pct < 0 || d.battery_pct > 100) fail(where + "battery must be within [0, 100]");
  d.profile.validate();
  DeviceSession check(d.index, d.profile, link_for(d.link), d.initial, d.script, 0);
}

void Scenario::validate_schedule(std::size_t i) const {
  const auto& s = attacker.schedules.at(i);
  const std::string where = "schedule " + std::to_string(i) + ": ";
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    fail(where + e.what());
  }
  if (needs_conversation(s.kind) && !has_conversation()) {
    fail(where + std::string(to_string(s.kind)) + " probes need an existing conversation (CreepyCompanion)");
  }
  if (s.kind == ProbeKind::SelfReaction && !policy.self_reaction_allowed) {
    fail(where + std::string(to_string(policy.name)) + " does not allow self-reactions");
  }
  for (const auto& d : victim.devices) {
    bool stealthy = false;
    try {
      stealthy = is_stealthy(s.kind, context_for(*this, d.profile.os), policy);
    } catch (const InvalidInput& e) {
      fail(where + e.what());
    }
    if (!stealthy && !attacker.allow_visible) {
      fail(where + std::string(to_string(s.kind)) + " probes notify the victim on " +
           std::string(to_string(d.profile.os)) + " (set allow_visible to run them anyway)");
    }
  }
}

void Scenario::validate() const {
  validate_header();
  for (std::size_t i = 0; i < victim.devices.size(); ++i) validate_device(i);
  for (std::size_t i = 0; i < attacker.schedules.size(); ++i) validate_schedule(i);
}

void EventLog::append(SimTime t, std::string actor, std::string kind, json payload) {
  records_.push_back({t, records_.size(), std::move(actor), std::move(kind), std::move(payload)});
}

void EventLog::order() {
  std::stable_sort(records_.begin(), records_.end(),
                   [](const LogRecord& a, const LogRecord& b) { return a.t_ms < b.t_ms; });
}

std::size_t EventLog::count(std::string_view kind) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const LogRecord& r) { return r.kind == kind; }));
}

ActivityState DeviceTruth::scripted_at(SimTime t) const {
  if (history.empty()) return ActivityState::Offline;
  auto it = std::upper_bound(history.begin(), history.end(), t,
                             [](SimTime v, const StateChange& c) { return v < c.at; });
  const StateChange& c = it == history.begin() ? history.front() : *std::prev(it);
  if (c.link == LinkTech::Offline) return ActivityState::Offline;
  return c.scripted;
}

bool DeviceTruth::online_at(SimTime t) const {
  if (t < registered_at || (removed_at && t >= *removed_at)) return false;
  return scripted_at(t) != ActivityState::Offline;
}

std::size_t RunResult::device_ack_events() const {
  return static_cast<std::size_t>(std::count_if(receipts.begin(), receipts.end(), [](const ReceiptEvent& r) {
    return r.kind == ReceiptKind::DeviceAck;
  }));
}

const DeviceTruth& RunResult::device(DeviceIndex index) const {
  for (const auto& d : truth) {
    if (d.index == index) return d;
  }
  throw InvalidInput("no device " + std::to_string(index) + " in run");
}

namespace {

struct Event {
  SimTime t;
  std::uint64_t seq;
  std::function<void()> fn;
  bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

struct ProbeRecord {
  ProbeAction action;
  ReceiptVerdict verdict;
  bool shared = false;      // one receipt answers for every device
  bool claimed = false;     // shared receipt already issued
};

struct Device {
  DeviceConfig cfg;
  std::unique_ptr<DeviceSession> session;
  std::unique_ptr<Rng> rng;
  std::unique_ptr<Rng> stack_rng;
  bool registered = false;
  bool removed = false;
  bool online = false;
  std::vector<ProbeId> unread;
  SimTime battery_at = 0;
  std::int64_t rx_at_battery = 0;
  std::int64_t acks_sent = 0;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& sc)
      : sc_(sc),
        policy_(mitigate_policy(sc.policy, sc.mitigations)),
        topology_(sc.topology),
        net_(mix_seed(sc.seed, 1)),
        noise_(mix_seed(sc.seed, 3)),
        pins_(mix_seed(sc.seed, 4)),
        nonce_(mix_seed(sc.seed, 5)),
        directory_(sc.victim.account, sc.victim.devices.front().index) {}

  RunResult run() {
    setup();
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.t > sc_.end_at) break;
      now_ = ev.t;
      ev.fn();
    }
    now_ = sc_.end_at;
    for (auto& [idx, dev] : devices_) {
      if (dev.registered && !dev.removed) sync(dev, sc_.end_at);
      update_battery(dev, sc_.end_at);
    }
    return finish();
  }

 private:
  void at(SimTime t, std::function<void()> fn) { queue_.push({t, next_event_++, std::move(fn)}); }

  // First-in first-out per directed link: nothing overtakes an earlier message.
  SimTime transmit(const std::string& link, SimTime depart, double delay_ms) {
    double d = delay_ms;
    const auto& cond = topology_.conditions;
    if (cond.loss_probability > 0) {
      while (net_.uniform01() < cond.loss_probability) d += static_cast<double>(cond.retransmit_after);
    }
    SimTime arrival = depart + static_cast<SimTime>(std::llround(d));
    auto [it, inserted] = last_arrival_.try_emplace(link, arrival);
    if (!inserted) {
      arrival = std::max(arrival, it->second + 1);
      it->second = arrival;
    }
    return arrival;
  }

  void setup() {
    for (const AccountId* acc : {&sc_.attacker.account, &sc_.victim.account}) {
      if (!topology_.routing_pins.contains(*acc)) update_routing_pin(*acc, topology_, PinStrategy::KeepCookie, pins_);
    }
    mss_ = topology_.pin(sc_.attacker.account);
    msr_ = topology_.pin(sc_.victim.account);

    std::vector<DeviceIndex> initial;
    for (const auto& cfg : sc_.victim.devices) {
      Device dev;
      dev.cfg = cfg;
      dev.cfg.profile = mitigate_profile(cfg.profile, sc_.mitigations);
      dev.session = std::make_unique<DeviceSession>(cfg.index, dev.cfg.profile, sc_.link_for(cfg.link), cfg.initial,
                                                    cfg.script, std::min<SimTime>(0, cfg.registered_at));
      dev.session->set_link_presets(presets());
      dev.session->set_battery(cfg.battery_pct);
      dev.rng = std::make_unique<Rng>(mix_seed(sc_.seed, 100 + static_cast<std::uint64_t>(cfg.index)));
      dev.stack_rng = std::make_unique<Rng>(mix_seed(sc_.seed, 10000 + static_cast<std::uint64_t>(cfg.index)));
      dev.online = dev.session->online();
      const DeviceIndex idx = cfg.index;
      if (cfg.registered_at <= 0) {
        dev.registered = true;
        initial.push_back(idx);
      } else {
        at(cfg.registered_at, [this, idx] { register_device(idx); });
      }
      if (cfg.removed_at) at(*cfg.removed_at, [this, idx] { remove_device(idx); });
      for (const auto& e : cfg.script) {
        if (e.at > 0) at(e.at, [this, idx] { sync(devices_.at(idx), now_); });
      }
      devices_.emplace(idx, std::move(dev));
    }
    directory_ = DeviceDirectory::from_indices(sc_.victim.account, initial);
    for (auto& [idx, dev] : devices_) {
      if (dev.registered) sync(dev, 0);
    }

    std::vector<std::pair<SimTime, std::size_t>> requests;
    for (std::size_t i = 0; i < sc_.attacker.schedules.size(); ++i) {
      for (SimTime t : sc_.attacker.schedules[i].send_times()) requests.emplace_back(t, i);
    }
    std::stable_sort(requests.begin(), requests.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    SenderRateLimiter limiter = sc_.mitigations.rate_limit.value_or(
        sc_.attacker.limiter.value_or(SenderRateLimiter::preset(sc_.policy.name)));
    RateLimiterState state(limiter);
    for (const auto& [t, i] : requests) {
      const auto& sched = sc_.attacker.schedules[i];
      const SimTime d = state.depart(t, sched.payload_bytes + kEnvelopeBytes);
      if (d > sc_.end_at) break;
      at(d, [this, i] { send_probe(sc_.attacker.schedules[i]); });
    }
  }

  std::map<LinkTech, AccessLink> presets() const {
    std::map<LinkTech, AccessLink> out;
    for (auto t : {LinkTech::WiFi, LinkTech::LTE, LinkTech::LAN, LinkTech::Offline}) out[t] = sc_.link_for(t);
    return out;
  }

  std::string dev_link(DeviceIndex idx, const char* dir) const { return "d" + std::to_string(idx) + dir; }

  void register_device(DeviceIndex idx) {
    auto& dev = devices_.at(idx);
    directory_.add_device(idx);
    dev.registered = true;
    log_.append(now_, "server", "device_registered", {{"device_index", idx}});
    sync(dev, now_);
  }

  void remove_device(DeviceIndex idx) {
    auto& dev = devices_.at(idx);
    if (!dev.registered || dev.removed) return;
    sync(dev, now_);
    update_battery(dev, now_);
    directory_.remove_device(idx);
    dev.removed = true;
    dev.session->take_queue();
    log_.append(now_, "server", "device_removed", {{"device_index", idx}});
  }

  // Brings a device to `t` and reacts to reconnects and opened chats.
  void sync(Device& dev, SimTime t) {
    if (!dev.registered || dev.removed) return;
    const auto before = dev.session->history().size();
    AdvanceResult r = dev.session->advance(t);
    const auto& hist = dev.session->history();
    for (auto i = before; i < hist.size(); ++i) {
      log_.append(hist[i].at, "victim", "state_change",
                  {{"device_index", dev.cfg.index},
                   {"state", to_string(hist[i].state)},
                   {"scripted", to_string(hist[i].scripted)},
                   {"link", to_string(hist[i].link)}});
    }
    const bool online = dev.session->online();
    if (online && !dev.online) {
      dev.online = true;
      flush(dev, t);
    } else {
      dev.online = online;
    }
    for (SimTime opened : r.conversation_opened) {
      if (!sc_.victim.read_receipts || dev.unread.empty() || !online) continue;
      auto receipts = read_receipts(*dev.session, dev.unread, std::max(opened, t), *dev.stack_rng);
      dev.unread.clear();
      for (auto& rc : receipts) emit(dev.cfg.index, rc);
    }
  }

  void flush(Device& dev, SimTime t) {
    auto queue = dev.session->take_queue();
    if (queue.empty()) return;
    for (auto& p : queue) {
      p.acknowledge = claim(p.probe.id, p.acknowledge);
      dev.session->enqueue(p);
    }
    auto receipts = flush_offline_queue(*dev.session, t, *dev.rng, &noise_);
    log_.append(t, "victim", "backlog_flushed", {{"device_index", dev.cfg.index}, {"probes", queue.size()}});
    for (const auto& p : queue) after_processing(dev, p, t);
    for (auto& rc : receipts) emit(dev.cfg.index, rc);
  }

  // Shared receipts: only the first device to process the probe answers.
  bool claim(const ProbeId& id, bool acknowledge) {
    if (!acknowledge) return false;
    auto& rec = probes_.at(id.sequence);
    if (!rec.shared) return true;
    if (rec.claimed) return false;
    rec.claimed = true;
    return true;
  }

  void after_processing(Device& dev, const IncomingProbe& p, SimTime t) {
    if (p.visible) {
      ++ui_notifications_;
      dev.unread.push_back(p.probe.id);
      log_.append(t, "victim", "ui_notification",
                  {{"device_index", dev.cfg.index}, {"probe_id", p.probe.id.to_string()},
                   {"kind", to_string(p.probe.kind)}});
    }
    update_battery(dev, t);
  }

  void update_battery(Device& dev, SimTime t) {
    if (!dev.cfg.profile.battery || t <= dev.battery_at) return;
    const std::int64_t bytes = dev.session->rx_bytes() - dev.rx_at_battery;
    drain_battery(*dev.session, bytes, static_cast<double>(t - dev.battery_at) / 1000.0, *dev.cfg.profile.battery);
    dev.battery_at = t;
    dev.rx_at_battery = dev.session->rx_bytes();
  }

  bool flood_blocked(SimTime t) {
    if (!policy_.flood_threshold_per_min) return false;
    if (t < blocked_until_) return true;
    recent_.push_back(t);
    while (!recent_.empty() && recent_.front() <= t - kMinute) recent_.erase(recent_.begin());
    if (static_cast<int>(recent_.size()) <= *policy_.flood_threshold_per_min) return false;
    blocked_until_ = t + policy_.flood_block;
    recent_.clear();
    ++ui_notifications_;
    log_.append(t, "victim", "ui_notification", {{"kind", "flood_warning"}, {"sender", sc_.attacker.account.value}});
    log_.append(t, "server", "sender_blocked", {{"until", blocked_until_}});
    return true;
  }

  void send_probe(const ProbeSchedule& sched) {
    const SimTime d = now_;
    const std::uint64_t seq = next_probe_++;
    ProbeAction action;
    action.id = ProbeId{nonce_.next_u64(), seq};
    action.kind = sched.kind;
    action.payload_bytes = sched.payload_bytes;
    action.ref_valid = sched.effective_ref_valid();
    action.sent_at = d;

    auto snap = directory_.indices();
    if (directory_log_.empty() || directory_log_.back().indices != snap) directory_log_.push_back({d, snap});

    ProbeFacts facts;
    facts.kind = action.kind;
    facts.ref_valid = action.ref_valid;
    facts.payload_bytes = action.payload_bytes;
    if (action.kind == ProbeKind::Edit || action.kind == ProbeKind::Delete) {
      facts.ref_age = sc_.attacker.reference_age + d;
    }
    facts.prior_edits = edits_;
    facts.from_stranger = sc_.attacker_is_stranger();
    ProbeRecord rec{action, evaluate_receipt(facts, policy_), !policy_.per_device_receipts, false};
    ++probes_sent_;

    const bool blocked = flood_blocked(d);
    if (blocked || rec.verdict.decision == ReceiptDecision::RejectedByServer) {
      ++probes_rejected_;
      collector_.on_rejected(action.id, d);
      log_.append(d, "server", "probe_rejected",
                  {{"probe_id", action.id.to_string()}, {"reason", blocked ? "sender_blocked" : "payload_or_edit_limit"}});
      return;
    }
    if (action.kind == ProbeKind::Edit) ++edits_;
    probes_.emplace(seq, rec);
    collector_.on_sent(action.id, d, snap);
    log_.append(d, "attacker", "probe_sent",
                {{"probe_id", action.id.to_string()}, {"kind", to_string(action.kind)},
                 {"payload_bytes", action.payload_bytes}});

    const auto& link = sc_.attacker.link;
    const SimTime t1 = transmit("a.up", d, link.up.sample(net_, link.jitter_scale));
    at(t1, [this, seq] { at_sender_server(seq); });
  }

  void at_sender_server(std::uint64_t seq) {
    const SimTime t = now_;
    const ProbeId id = probes_.at(seq).action.id;
    const auto& link = sc_.attacker.link;
    const SimTime back = transmit("a.down", t, link.down.sample(net_, link.jitter_scale));
    at(back, [this, id] { observe({ReceiptKind::ServerAck, {id}, std::nullopt, now_}); });
    SimTime t3 = t;
    if (mss_ != msr_) t3 = transmit("x." + mss_ + "." + msr_, t, topology_.hop(mss_, msr_).sample(net_));
    at(t3, [this, seq] { at_receiver_server(seq); });
  }

  void at_receiver_server(std::uint64_t seq) {
    if (directory_.empty()) return;
    const auto& rec = probes_.at(seq);
    for (const auto& task : fanout(rec.action, directory_, policy_)) {
      for (DeviceIndex idx : task.recipients) dispatch(seq, idx);
    }
  }

  IncomingProbe incoming(const ProbeRecord& rec, const Device& dev) const {
    IncomingProbe p;
    p.probe = rec.action;
    p.acknowledge = rec.verdict.emits_receipt();
    p.from_stranger = sc_.attacker_is_stranger();
    p.visible = rec.verdict.applied && !is_stealthy(rec.action.kind, context_for(sc_, dev.cfg.profile.os), policy_);
    return p;
  }

  void dispatch(std::uint64_t seq, DeviceIndex idx) {
    auto& dev = devices_.at(idx);
    sync(dev, now_);
    if (!dev.registered || dev.removed) return;
    const auto& rec = probes_.at(seq);
    if (!dev.session->online()) {
      dev.session->enqueue(incoming(rec, dev));
      log_.append(now_, "server", "probe_queued", {{"device_index", idx}, {"probe_id", rec.action.id.to_string()}});
      return;
    }
    const auto& link = dev.session->link();
    const SimTime arrival = transmit(dev_link(idx, ".down"), now_, link.down.sample(net_, link.jitter_scale));
    at(arrival, [this, seq, idx] { deliver(seq, idx); });
  }

  void deliver(std::uint64_t seq, DeviceIndex idx) {
    auto& dev = devices_.at(idx);
    sync(dev, now_);
    if (!dev.registered || dev.removed) return;
    const auto& rec = probes_.at(seq);
    IncomingProbe p = incoming(rec, dev);
    if (!dev.session->online()) {
      dev.session->enqueue(p);
      log_.append(now_, "victim", "probe_queued", {{"device_index", idx}, {"probe_id", rec.action.id.to_string()}});
      return;
    }
    p.acknowledge = claim(p.probe.id, p.acknowledge);
    const ActivityState state = dev.session->state();
    auto receipts = process_incoming(*dev.session, p, now_, *dev.rng, &noise_);
    log_.append(now_, "victim", "probe_processed",
                {{"device_index", idx}, {"probe_id", rec.action.id.to_string()}, {"state", to_string(state)},
                 {"acknowledge", p.acknowledge}});
    after_processing(dev, p, now_);
    for (auto& rc : receipts) emit(idx, rc);
  }

  void emit(DeviceIndex idx, const ScheduledReceipt& rc) {
    at(std::max(rc.depart_at, now_), [this, idx, rc] {
      auto& dev = devices_.at(idx);
      sync(dev, now_);
      if (dev.removed) return;
      if (rc.kind == ReceiptKind::DeviceAck) ++dev.acks_sent;
      const DeviceIndex reported = policy_.per_device_receipts || directory_.empty() ? idx : directory_.main_device();
      const auto& link = dev.session->link();
      const SimTime t_up = transmit(dev_link(idx, ".up"), now_, link.up.sample(net_, link.jitter_scale));
      ReceiptEvent ev{rc.kind, rc.probe_ids, reported, 0};
      log_.append(now_, "victim", "receipt_sent",
                  {{"device_index", idx}, {"kind", to_string(rc.kind)}, {"probes", rc.probe_ids.size()}});
      at(t_up, [this, ev] {
        SimTime t = now_;
        if (mss_ != msr_) t = transmit("x." + msr_ + "." + mss_, now_, topology_.hop(msr_, mss_).sample(net_));
        at(t, [this, ev] {
          const auto& alink = sc_.attacker.link;
          const SimTime obs = transmit("a.down", now_, alink.down.sample(net_, alink.jitter_scale));
          at(obs, [this, ev] {
            ReceiptEvent e = ev;
            e.observed_at = now_;
            observe(e);
          });
        });
      });
    });
  }

  void observe(const ReceiptEvent& e) {
    collector_.on_receipt(e);
    json ids = json::array();
    for (const auto& id : e.probe_ids) ids.push_back(id.to_string());
    log_.append(now_, "attacker", "receipt_observed",
                {{"kind", to_string(e.kind)},
                 {"device_index", e.device_index ? json(*e.device_index) : json(nullptr)},
                 {"probe_ids", ids}});
  }

  RunResult finish() {
    RunResult r;
    r.samples = collector_.samples();
    r.receipts = collector_.receipts();
    r.directory = directory_log_;
    log_.order();
    r.log = std::move(log_);
    r.probes_sent = probes_sent_;
    r.probes_rejected = probes_rejected_;
    r.ui_notifications = ui_notifications_;
    r.end_at = sc_.end_at;
    for (auto& [idx, dev] : devices_) {
      DeviceTruth t;
      t.index = idx;
      t.profile = dev.cfg.profile.name;
      t.os = dev.cfg.profile.os;
      t.registered_at = dev.cfg.registered_at;
      t.removed_at = dev.cfg.removed_at;
      t.history = dev.session->history();
      t.battery_start_pct = dev.cfg.battery_pct;
      t.battery_end_pct = dev.session->battery_pct();
      t.rx_bytes = dev.session->rx_bytes();
      t.device_acks_sent = dev.acks_sent;
      r.truth.push_back(std::move(t));
    }
    return r;
  }

  const Scenario& sc_;
  MessengerPolicy policy_;
  ServerTopology topology_;
  Rng net_, noise_, pins_, nonce_;
  DeviceDirectory directory_;
  std::string mss_, msr_;
  std::map<DeviceIndex, Device> devices_;
  std::map<std::uint64_t, ProbeRecord> probes_;
  std::map<std::string, SimTime> last_arrival_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_event_ = 0;
  std::uint64_t next_probe_ = 0;
  SimTime now_ = 0;
  SampleCollector collector_;
  std::vector<DirectorySnapshot> directory_log_;
  EventLog log_;
  std::vector<SimTime> recent_;
  SimTime blocked_until_ = 0;
  int edits_ = 0;
  std::int64_t probes_sent_ = 0;
  std::int64_t probes_rejected_ = 0;
  std::int64_t ui_notifications_ = 0;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  Simulator sim(scenario);
  return sim.run();
}

json run_summary(const RunResult& r, const Scenario& sc) {
  json j;
  j["scenario"] = sc.name;
  j["seed"] = sc.seed;
  j["policy"] = to_string(sc.policy.name);
  j["attacker_type"] = to_string(sc.attacker.type);
  j["end_at"] = r.end_at;
  j["probes_sent"] = r.probes_sent;
  j["probes_rejected"] = r.probes_rejected;
  j["server_acks"] = std::count_if(r.receipts.begin(), r.receipts.end(),
                                   [](const ReceiptEvent& e) { return e.kind == ReceiptKind::ServerAck; });
  j["device_ack_events"] = r.device_ack_events();
  j["ui_notifications"] = r.ui_notifications;
  j["mitigations_active"] = sc.mitigations.any();
  json devs = json::array();
  for (const auto& d : r.truth) {
    devs.push_back({{"device_index", d.index},
                    {"profile", d.profile},
                    {"rx_bytes", d.rx_bytes},
                    {"battery_start_pct", d.battery_start_pct},
                    {"battery_end_pct", d.battery_end_pct},
                    {"battery_delta_pct", d.battery_end_pct - d.battery_start_pct},
                    {"device_acks_sent", d.device_acks_sent}});
  }
  j["devices"] = devs;
  return j;
}

void write_run(const RunResult& r, const Scenario& sc, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root / "attacker");
  fs::create_directories(root / "truth");
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(root / "attacker" / "samples.jsonl");
    write_samples_jsonl(out, r.samples);
  }
  {
    auto out = open(root / "attacker" / "samples.csv");
    write_samples_csv(out, r.samples);
  }
  {
    auto out = open(root / "attacker" / "receipts.jsonl");
    write_receipts_jsonl(out, r.receipts);
  }
  {
    auto out = open(root / "attacker" / "directory.jsonl");
    for (const auto& s : r.directory) out << json{{"at", s.at}, {"indices", s.indices}}.dump() << '\n';
  }
  {
    json truth;
    truth["epoch_of_day"] = format_time_of_day(0, sc.epoch_of_day);
    json devs = json::array();
    for (const auto& d : r.truth) {
      json hist = json::array();
      for (const auto& c : d.history) {
        hist.push_back({{"at", c.at},
                        {"state", to_string(c.state)},
                        {"scripted", to_string(c.scripted)},
                        {"link", to_string(c.link)}});
      }
      devs.push_back({{"device_index", d.index},
                      {"profile", d.profile},
                      {"os", to_string(d.os)},
                      {"registered_at", d.registered_at},
                      {"removed_at", d.removed_at ? json(*d.removed_at) : json(nullptr)},
                      {"history", hist}});
    }
    truth["devices"] = devs;
    auto out = open(root / "truth" / "ground_truth.json");
    out << truth.dump(2) << '\n';
  }
  {
    auto out = open(root / "truth" / "events.jsonl");
    for (const auto& rec : r.log.records()) {
      out << json{{"t_ms", rec.t_ms}, {"seq", rec.seq}, {"actor", rec.actor}, {"kind", rec.kind},
                  {"payload", rec.payload}}
                 .dump()
          << '\n';
    }
  }
  auto out = open(root / "summary.json");
  out << run_summary(r, sc).dump(2) << '\n';
}

}  // namespace ackscope
