#include "redlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <map>
#include <set>
#include <sstream>

#include "redlab/common.hpp"
#include "redlab/rng.hpp"

namespace redlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kNone = ~std::uint64_t{0};
constexpr std::uint64_t kInternalSalt = 0x9E3779B97F4A7C15ull;

}  // namespace

std::string dispatch_name(Dispatch d) {
  switch (d) {
    case Dispatch::Redundancy: return "redundancy";
    case Dispatch::Bernoulli: return "bernoulli";
    case Dispatch::Jsq: return "jsq";
  }
  return "?";
}

std::string scheduling_name(Scheduling s) {
  switch (s) {
    case Scheduling::Ps: return "ps";
    case Scheduling::Fcfs: return "fcfs";
    case Scheduling::Ros: return "ros";
  }
  return "?";
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Original: return "original";
    case Variant::UpperBound: return "upper_bound";
    case Variant::LowerBound: return "lower_bound";
  }
  return "?";
}

Dispatch dispatch_from_string(const std::string& s) {
  if (s == "redundancy") return Dispatch::Redundancy;
  if (s == "bernoulli") return Dispatch::Bernoulli;
  if (s == "jsq") return Dispatch::Jsq;
  throw ConfigError("unknown dispatch: " + s);
}

Scheduling scheduling_from_string(const std::string& s) {
  if (s == "ps") return Scheduling::Ps;
  if (s == "fcfs") return Scheduling::Fcfs;
  if (s == "ros") return Scheduling::Ros;
  throw ConfigError("unknown scheduling: " + s);
}

Variant variant_from_string(const std::string& s) {
  if (s == "original") return Variant::Original;
  if (s == "upper_bound") return Variant::UpperBound;
  if (s == "lower_bound") return Variant::LowerBound;
  throw ConfigError("unknown variant: " + s);
}

void SimConfig::validate() const {
  validate_topology(topology);
  if (busy_periods < 1) throw ConfigError("busy_periods must be >= 1");
  if (warmup_periods < 0) throw ConfigError("warmup_periods must be >= 0");
  if (max_events <= 0) throw ConfigError("max_events must be positive");
  if (variant != Variant::Original) {
    if (dispatch != Dispatch::Redundancy)
      throw ConfigError("bound variants require redundancy dispatch");
    if (scheduling != Scheduling::Ps)
      throw ConfigError("bound variants are defined for processor sharing only");
    if (modulation) throw ConfigError("bound variants do not support modulated capacities");
    if (lb_stage < 1) throw ConfigError("lb_stage must be >= 1");
  }
  if (!initial_jobs.empty() &&
      initial_jobs.size() != static_cast<std::size_t>(topology.num_types()))
    throw ConfigError("initial_jobs must list one count per type");
  for (long n : initial_jobs)
    if (n < 0) throw ConfigError("initial_jobs counts must be nonnegative");
  if (modulation) modulation->validate();
}

namespace {

// ---------------------------------------------------------------------------
// Event engine for one system instance. Arrivals are injected by the driver
// so that several instances can share one coupled stream.
// ---------------------------------------------------------------------------

struct CopyLoc {
  int server = -1;
  double threshold = 0.0;                    // PS: eta value at which it completes
  std::list<std::uint64_t>::iterator fifo;   // FCFS
  int ros_slot = -1;                         // ROS: queue slot, -1 = in service
};

struct Job {
  int type = 0;
  double b = 0.0;
  double arrival = 0.0;
  int alive = 0;      // copies still occupying a server
  int r_pending = 0;  // bound system: least-loaded copies not yet fully served
  bool live = false;
  std::vector<CopyLoc> copies;  // parallel to the type's server list
};

struct Server {
  double base_cap = 0.0;
  double cap = 0.0;
  long m = 0;  // copies present
  // PS
  double eta = 0.0;  // cumulative per-copy service
  std::set<std::pair<double, std::uint64_t>> ps;
  // FCFS
  std::list<std::uint64_t> fifo;
  double head_remaining = 0.0;
  // ROS
  std::vector<std::uint64_t> ros_queue;
  std::uint64_t ros_active = kNone;
  double ros_remaining = 0.0;
  // modulation
  double next_ring = kInf;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, std::uint64_t internal_seed)
      : top_(cfg.topology),
        dispatch_(cfg.dispatch),
        mode_(cfg.scheduling),
        variant_(cfg.variant),
        modulation_(cfg.modulation),
        check_(cfg.check_invariants),
        internal_(internal_seed) {
    const int K = top_.num_servers();
    servers_.resize(K);
    for (int s = 0; s < K; ++s) {
      servers_[s].base_cap = top_.capacities[s];
      servers_[s].cap = top_.capacities[s];
    }
    n_per_type_.assign(top_.num_types(), 0);
    area_copies_.assign(K, 0.0);

    if (variant_ != Variant::Original) {
      chain_ = subsystem_chain(top_);
      in_r_.assign(top_.num_types(), {});
      for (int c = 0; c < top_.num_types(); ++c) {
        const auto& srv = top_.types[c].servers;
        in_r_[c].assign(srv.size(), false);
        const auto& r = chain_.least_loaded_of[c];
        for (std::size_t i = 0; i < srv.size(); ++i)
          in_r_[c][i] = std::find(r.begin(), r.end(), srv[i]) != r.end();
      }
      if (variant_ == Variant::LowerBound) {
        int iota = cfg.lb_stage;
        if (iota > chain_.i_star()) {
          std::ostringstream os;
          os << "lb_stage " << iota << " out of range (i* = " << chain_.i_star() << ")";
          throw ConfigError(os.str());
        }
        const ChainStage& st = chain_.stages[iota - 1];
        lb_type_.assign(top_.num_types(), false);
        for (std::size_t c : st.types) lb_type_[c] = true;
        for (int s = 0; s < K; ++s) {
          double mass = 0.0;
          for (std::size_t c : st.types)
            if (top_.types[c].contains(s)) mass += top_.types[c].prob;
          servers_[s].cap = servers_[s].base_cap = st.car * mass;
        }
        lb_eta_.assign(top_.num_types(), 0.0);
        lb_set_.resize(top_.num_types());
      }
    }
    if (modulation_) {
      for (auto& sv : servers_) sv.next_ring = internal_.exponential(1.0 / modulation_->epsilon);
    }
  }

  double now() const { return now_; }
  long jobs() const { return jobs_; }
  long completed() const { return completed_; }
  double area_jobs() const { return area_jobs_; }
  const std::vector<double>& area_copies() const { return area_copies_; }
  const std::vector<long>& jobs_per_type() const { return n_per_type_; }

  std::vector<long> copies_per_server() const {
    std::vector<long> out(servers_.size());
    for (std::size_t s = 0; s < servers_.size(); ++s) out[s] = servers_[s].m;
    return out;
  }

  long total_copies() const {
    long t = 0;
    for (const auto& sv : servers_) t += sv.m;
    return t;
  }

  // earliest internal event (completion or capacity ring)
  double next_internal() const {
    double best = kInf;
    if (variant_ == Variant::LowerBound) {
      for (int c = 0; c < top_.num_types(); ++c) {
        if (lb_set_[c].empty()) continue;
        double phi = lb_phi(c);
        best = std::min(best, now_ + std::max(0.0, lb_set_[c].begin()->first - lb_eta_[c]) / phi);
      }
    } else {
      for (const auto& sv : servers_) best = std::min(best, completion_candidate(sv));
    }
    for (const auto& sv : servers_) best = std::min(best, sv.next_ring);
    return best;
  }

  void advance_to(double t) {
    double dt = t - now_;
    if (dt <= 0.0) {
      now_ = t;
      return;
    }
    area_jobs_ += static_cast<double>(jobs_) * dt;
    for (std::size_t s = 0; s < servers_.size(); ++s)
      area_copies_[s] += static_cast<double>(servers_[s].m) * dt;

    if (variant_ == Variant::LowerBound) {
      for (int c = 0; c < top_.num_types(); ++c)
        if (!lb_set_[c].empty()) lb_eta_[c] += dt * lb_phi(c);
    } else {
      for (auto& sv : servers_) {
        if (sv.m == 0) continue;
        switch (mode_) {
          case Scheduling::Ps:
            sv.eta += dt * sv.cap / static_cast<double>(sv.m);
            break;
          case Scheduling::Fcfs:
            if (!sv.fifo.empty()) sv.head_remaining -= dt * sv.cap;
            break;
          case Scheduling::Ros:
            if (sv.ros_active != kNone) sv.ros_remaining -= dt * sv.cap;
            break;
        }
      }
    }
    now_ = t;
  }

  // process every internal event due at the current instant; returns count
  int process_due() {
    int processed = 0;
    const double eps = 1e-9 * (1.0 + std::abs(now_));
    while (true) {
      // capacity rings first
      bool rang = false;
      for (auto& sv : servers_) {
        if (sv.next_ring <= now_ + eps) {
          double slowdown = modulation_->sample_slowdown(internal_);
          sv.cap = sv.base_cap / slowdown;
          sv.next_ring = now_ + internal_.exponential(1.0 / modulation_->epsilon);
          ++processed;
          rang = true;
        }
      }
      if (rang) continue;

      if (variant_ == Variant::LowerBound) {
        int due = -1;
        double best = kInf;
        for (int c = 0; c < top_.num_types(); ++c) {
          if (lb_set_[c].empty()) continue;
          double cand = now_ + std::max(0.0, lb_set_[c].begin()->first - lb_eta_[c]) / lb_phi(c);
          if (cand < best) {
            best = cand;
            due = c;
          }
        }
        if (due < 0 || best > now_ + eps) break;
        complete_lb_job(due);
        ++processed;
        continue;
      }

      int due = -1;
      double best = kInf;
      for (std::size_t s = 0; s < servers_.size(); ++s) {
        double cand = completion_candidate(servers_[s]);
        if (cand < best) {
          best = cand;
          due = static_cast<int>(s);
        }
      }
      if (due < 0 || best > now_ + eps) break;
      complete_copy_at(due);
      ++processed;
    }
    if (check_ && processed > 0) check_state();
    return processed;
  }

  // arrival (or initial placement) of one job at the current instant
  void add_job(int type, double b) {
    if (variant_ == Variant::LowerBound) {
      if (!lb_type_[type]) return;  // types outside the kept subsystem are dropped
      std::uint64_t id = alloc_job(type, b);
      lb_set_[type].insert({lb_eta_[type] + b, id});
      for (int s : top_.types[type].servers) servers_[s].m += 1;
      jobs_ += 1;
      n_per_type_[type] += 1;
      if (check_) check_state();
      return;
    }

    const auto& srv = top_.types[type].servers;
    int chosen = -1;  // single-copy dispatch target; -1 = all of them
    if (dispatch_ == Dispatch::Bernoulli) {
      chosen = srv.size() == 1 ? 0 : internal_.uniform_int(static_cast<int>(srv.size()));
    } else if (dispatch_ == Dispatch::Jsq) {
      long best = std::numeric_limits<long>::max();
      std::vector<int> mins;
      for (std::size_t i = 0; i < srv.size(); ++i) {
        long m = servers_[srv[i]].m;
        if (m < best) {
          best = m;
          mins.clear();
        }
        if (m == best) mins.push_back(static_cast<int>(i));
      }
      chosen = mins.size() == 1 ? mins[0] : mins[internal_.uniform_int(static_cast<int>(mins.size()))];
    }

    std::uint64_t id = alloc_job(type, b);
    Job& j = pool_[id];
    for (std::size_t slot = 0; slot < srv.size(); ++slot) {
      if (chosen >= 0 && static_cast<int>(slot) != chosen) continue;
      place_copy(id, static_cast<int>(slot));
      j.alive += 1;
    }
    if (variant_ == Variant::UpperBound) {
      j.r_pending = 0;
      for (std::size_t slot = 0; slot < srv.size(); ++slot)
        if (in_r_[type][slot]) j.r_pending += 1;
    }
    jobs_ += 1;
    n_per_type_[type] += 1;
    if (check_) check_state();
  }

  std::vector<JobRecord> snapshot_jobs() const {
    std::vector<JobRecord> out;
    for (std::uint64_t id = 0; id < pool_.size(); ++id) {
      const Job& j = pool_[id];
      if (!j.live) continue;
      JobRecord rec;
      rec.type = j.type;
      rec.requirement = j.b;
      rec.arrival_time = j.arrival;
      if (variant_ == Variant::LowerBound) {
        auto it = lb_locator_.find(id);
        double att = it == lb_locator_.end() ? j.b : lb_eta_[j.type] - (it->second - j.b);
        for (int s : top_.types[j.type].servers) rec.attained[s] = std::max(0.0, att);
      } else {
        const auto& srv = top_.types[j.type].servers;
        for (std::size_t slot = 0; slot < srv.size(); ++slot) {
          if (j.copies[slot].server < 0) continue;
          rec.attained[j.copies[slot].server] = copy_attained(id, static_cast<int>(slot));
        }
      }
      out.push_back(std::move(rec));
    }
    return out;
  }

  // full-state consistency walk; throws on any broken invariant
  void check_state() const {
    std::vector<long> m(servers_.size(), 0);
    std::vector<long> n(top_.num_types(), 0);
    for (std::uint64_t id = 0; id < pool_.size(); ++id) {
      const Job& j = pool_[id];
      if (!j.live) continue;
      n[j.type] += 1;
      if (variant_ == Variant::LowerBound) {
        for (int s : top_.types[j.type].servers) m[s] += 1;
        continue;
      }
      int alive = 0;
      for (std::size_t slot = 0; slot < j.copies.size(); ++slot) {
        const CopyLoc& loc = j.copies[slot];
        if (loc.server < 0) continue;
        alive += 1;
        m[loc.server] += 1;
        double a = copy_attained(id, static_cast<int>(slot));
        if (a < -1e-9 || a > j.b * (1.0 + 1e-9) + 1e-9)
          throw RuntimeError("invariant: attained service outside [0, b]");
      }
      if (alive != j.alive) throw RuntimeError("invariant: alive copy count mismatch");
      if (variant_ == Variant::Original && dispatch_ == Dispatch::Redundancy &&
          alive != static_cast<int>(j.copies.size()))
        throw RuntimeError("invariant: cancelled copy still tracked");
    }
    for (std::size_t s = 0; s < servers_.size(); ++s) {
      if (m[s] != servers_[s].m) throw RuntimeError("invariant: copy count mismatch at server");
      if (variant_ != Variant::LowerBound && mode_ == Scheduling::Ps &&
          static_cast<long>(servers_[s].ps.size()) != servers_[s].m)
        throw RuntimeError("invariant: queue size mismatch at server");
    }
    for (int c = 0; c < top_.num_types(); ++c) {
      if (n[c] != n_per_type_[c]) throw RuntimeError("invariant: per-type job count mismatch");
      if (variant_ == Variant::LowerBound &&
          static_cast<long>(lb_set_[c].size()) != n_per_type_[c])
        throw RuntimeError("invariant: bound-system queue size mismatch");
    }
    // original redundancy: M_s equals the sum of N_c over types through s
    if (variant_ == Variant::Original && dispatch_ == Dispatch::Redundancy) {
      for (std::size_t s = 0; s < servers_.size(); ++s) {
        long expect = 0;
        for (int c = 0; c < top_.num_types(); ++c)
          if (top_.types[c].contains(static_cast<int>(s))) expect += n_per_type_[c];
        if (expect != servers_[s].m)
          throw RuntimeError("invariant: M_s != sum of N_c over hosted types");
      }
    }
  }

  void rebase_if_empty() {
    if (jobs_ != 0) return;
    for (auto& sv : servers_) sv.eta = 0.0;
    for (auto& e : lb_eta_) e = 0.0;
  }

 private:
  double lb_phi(int type) const {
    double best = 0.0;
    for (int s : top_.types[type].servers)
      best = std::max(best, servers_[s].cap / static_cast<double>(servers_[s].m));
    return best;
  }

  double completion_candidate(const Server& sv) const {
    if (sv.m == 0) return kInf;
    switch (mode_) {
      case Scheduling::Ps: {
        if (sv.ps.empty()) return kInf;
        double gap = std::max(0.0, sv.ps.begin()->first - sv.eta);
        return now_ + gap * static_cast<double>(sv.m) / sv.cap;
      }
      case Scheduling::Fcfs:
        if (sv.fifo.empty()) return kInf;
        return now_ + std::max(0.0, sv.head_remaining) / sv.cap;
      case Scheduling::Ros:
        if (sv.ros_active == kNone) return kInf;
        return now_ + std::max(0.0, sv.ros_remaining) / sv.cap;
    }
    return kInf;
  }

  double copy_attained(std::uint64_t id, int slot) const {
    const Job& j = pool_[id];
    const CopyLoc& loc = j.copies[slot];
    const Server& sv = servers_[loc.server];
    std::uint64_t uid = (id << 6) | static_cast<std::uint64_t>(slot);
    switch (mode_) {
      case Scheduling::Ps:
        return std::max(0.0, j.b - (loc.threshold - sv.eta));
      case Scheduling::Fcfs:
        if (!sv.fifo.empty() && sv.fifo.front() == uid)
          return std::max(0.0, j.b - sv.head_remaining);
        return 0.0;  // queued copies have not started
      case Scheduling::Ros:
        if (sv.ros_active == uid) return std::max(0.0, j.b - sv.ros_remaining);
        return 0.0;
    }
    return 0.0;
  }

  std::uint64_t alloc_job(int type, double b) {
    std::uint64_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = pool_.size();
      pool_.emplace_back();
    }
    Job& j = pool_[id];
    j.type = type;
    j.b = b;
    j.arrival = now_;
    j.alive = 0;
    j.r_pending = 0;
    j.live = true;
    j.copies.assign(top_.types[type].servers.size(), CopyLoc{});
    if (variant_ == Variant::LowerBound) lb_locator_[id] = lb_eta_[type] + b;
    return id;
  }

  void place_copy(std::uint64_t id, int slot) {
    Job& j = pool_[id];
    int s = top_.types[j.type].servers[slot];
    Server& sv = servers_[s];
    CopyLoc& loc = j.copies[slot];
    loc.server = s;
    std::uint64_t uid = (id << 6) | static_cast<std::uint64_t>(slot);
    switch (mode_) {
      case Scheduling::Ps:
        loc.threshold = sv.eta + j.b;
        sv.ps.insert({loc.threshold, uid});
        break;
      case Scheduling::Fcfs:
        sv.fifo.push_back(uid);
        loc.fifo = std::prev(sv.fifo.end());
        if (sv.fifo.size() == 1) sv.head_remaining = j.b;
        break;
      case Scheduling::Ros:
        if (sv.ros_active == kNone) {
          sv.ros_active = uid;
          sv.ros_remaining = j.b;
          loc.ros_slot = -1;
        } else {
          loc.ros_slot = static_cast<int>(sv.ros_queue.size());
          sv.ros_queue.push_back(uid);
        }
        break;
    }
    sv.m += 1;
  }

  // detach one copy from its server; does not touch job bookkeeping
  void detach_copy(std::uint64_t id, int slot) {
    Job& j = pool_[id];
    CopyLoc& loc = j.copies[slot];
    Server& sv = servers_[loc.server];
    std::uint64_t uid = (id << 6) | static_cast<std::uint64_t>(slot);
    switch (mode_) {
      case Scheduling::Ps:
        sv.ps.erase({loc.threshold, uid});
        break;
      case Scheduling::Fcfs: {
        bool was_head = sv.fifo.front() == uid;
        sv.fifo.erase(loc.fifo);
        if (was_head && !sv.fifo.empty()) {
          sv.head_remaining = pool_[sv.fifo.front() >> 6].b;  // next copy starts fresh
        }
        break;
      }
      case Scheduling::Ros:
        if (loc.ros_slot < 0) {
          ros_start_next(sv);
        } else {
          int slot_idx = loc.ros_slot;
          std::uint64_t moved = sv.ros_queue.back();
          sv.ros_queue[slot_idx] = moved;
          sv.ros_queue.pop_back();
          if (moved != uid)
            pool_[moved >> 6].copies[moved & 63].ros_slot = slot_idx;
        }
        break;
    }
    loc.server = -1;
    sv.m -= 1;
    j.alive -= 1;
  }

  void ros_start_next(Server& sv) {
    if (sv.ros_queue.empty()) {
      sv.ros_active = kNone;
      sv.ros_remaining = 0.0;
      return;
    }
    int pick = sv.ros_queue.size() == 1
                   ? 0
                   : internal_.uniform_int(static_cast<int>(sv.ros_queue.size()));
    std::uint64_t uid = sv.ros_queue[pick];
    std::uint64_t moved = sv.ros_queue.back();
    sv.ros_queue[pick] = moved;
    sv.ros_queue.pop_back();
    if (moved != uid) pool_[moved >> 6].copies[moved & 63].ros_slot = pick;
    sv.ros_active = uid;
    sv.ros_remaining = pool_[uid >> 6].b;
    pool_[uid >> 6].copies[uid & 63].ros_slot = -1;
  }

  void release_job(std::uint64_t id) {
    Job& j = pool_[id];
    // cancel every copy still in the system
    for (std::size_t slot = 0; slot < j.copies.size(); ++slot)
      if (j.copies[slot].server >= 0) detach_copy(id, static_cast<int>(slot));
    j.live = false;
    n_per_type_[j.type] -= 1;
    jobs_ -= 1;
    completed_ += 1;
    free_.push_back(id);
    rebase_if_empty();
  }

  // the copy at the front of server s's completion order finishes now
  void complete_copy_at(int s) {
    Server& sv = servers_[s];
    std::uint64_t uid = kNone;
    switch (mode_) {
      case Scheduling::Ps:
        uid = sv.ps.begin()->second;
        sv.eta = sv.ps.begin()->first;  // land exactly on the threshold
        break;
      case Scheduling::Fcfs:
        uid = sv.fifo.front();
        break;
      case Scheduling::Ros:
        uid = sv.ros_active;
        break;
    }
    std::uint64_t id = uid >> 6;
    int slot = static_cast<int>(uid & 63);
    Job& j = pool_[id];

    if (variant_ == Variant::UpperBound) {
      bool in_r = in_r_[j.type][slot];
      detach_copy(id, slot);
      if (in_r) {
        j.r_pending -= 1;
        if (j.r_pending == 0) release_job(id);  // removes leftover copies
      }
      return;
    }
    // original: first completed copy ends the whole job
    release_job(id);
  }

  void complete_lb_job(int type) {
    auto it = lb_set_[type].begin();
    std::uint64_t id = it->second;
    lb_eta_[type] = it->first;
    lb_set_[type].erase(it);
    lb_locator_.erase(id);
    for (int s : top_.types[type].servers) servers_[s].m -= 1;
    Job& j = pool_[id];
    j.live = false;
    n_per_type_[type] -= 1;
    jobs_ -= 1;
    completed_ += 1;
    free_.push_back(id);
    rebase_if_empty();
  }

  Topology top_;
  Dispatch dispatch_;
  Scheduling mode_;
  Variant variant_;
  std::optional<CapacityModulation> modulation_;
  bool check_ = false;
  Rng internal_;

  SubsystemChain chain_;
  std::vector<std::vector<bool>> in_r_;  // per type/slot: slot server in R(c)

  std::vector<bool> lb_type_;
  std::vector<double> lb_eta_;
  std::vector<std::set<std::pair<double, std::uint64_t>>> lb_set_;
  std::map<std::uint64_t, double> lb_locator_;  // job id -> completion threshold

  std::vector<Server> servers_;
  std::vector<Job> pool_;
  std::vector<std::uint64_t> free_;
  std::vector<long> n_per_type_;

  double now_ = 0.0;
  long jobs_ = 0;
  long completed_ = 0;
  double area_jobs_ = 0.0;
  std::vector<double> area_copies_;
};

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct Cycle {
  double area = 0.0;
  double duration = 0.0;
};

void ratio_estimate(const std::vector<Cycle>& cycles, double* mean, double* half_width) {
  double total_area = 0.0, total_time = 0.0;
  for (const auto& c : cycles) {
    total_area += c.area;
    total_time += c.duration;
  }
  if (cycles.empty() || total_time <= 0.0) {
    *mean = 0.0;
    *half_width = 0.0;
    return;
  }
  double r = total_area / total_time;
  *mean = r;
  const std::size_t n = cycles.size();
  if (n < 2) {
    *half_width = 0.0;
    return;
  }
  double ss = 0.0;
  for (const auto& c : cycles) {
    double e = c.area - r * c.duration;
    ss += e * e;
  }
  double var = ss / static_cast<double>(n - 1);
  double tbar = total_time / static_cast<double>(n);
  *half_width = 1.96 * std::sqrt(var / static_cast<double>(n)) / tbar;
}

SimResult run_impl(const SimConfig& cfg, bool trajectory, double horizon) {
  cfg.validate();
  Engine eng(cfg, cfg.seed ^ kInternalSalt);
  Rng master(cfg.seed);

  const Topology& top = cfg.topology;
  std::vector<double> type_cum(top.num_types());
  double acc = 0.0;
  for (int c = 0; c < top.num_types(); ++c) {
    acc += top.types[c].prob;
    type_cum[c] = acc;
  }

  for (std::size_t c = 0; c < cfg.initial_jobs.size(); ++c)
    for (long i = 0; i < cfg.initial_jobs[c]; ++i)
      eng.add_job(static_cast<int>(c), cfg.service.sample(master));

  const double lambda = top.lambda;
  double next_arrival = lambda > 0.0 ? master.exponential(lambda) : kInf;

  SimResult res;
  res.seed = cfg.seed;
  if (trajectory) {
    res.traj_time.push_back(0.0);
    res.traj_copies.push_back(eng.copies_per_server());
  }

  std::vector<Cycle> cycles;
  const long want_cycles = cfg.warmup_periods + cfg.busy_periods;
  bool in_cycle = false;
  double cycle_start = 0.0, cycle_area0 = 0.0;
  double window_start = -1.0, window_end = -1.0;
  std::vector<double> copies_area0(top.num_servers(), 0.0);
  std::vector<double> copies_area1(top.num_servers(), 0.0);

  long events = 0;
  while (true) {
    double t_int = eng.next_internal();
    double t = std::min(next_arrival, t_int);
    if (t == kInf) break;
    if (trajectory && t > horizon) {
      eng.advance_to(horizon);
      break;
    }
    if (events >= cfg.max_events) {
      res.diverged = true;
      break;
    }
    eng.advance_to(t);
    if (t_int <= next_arrival) {
      int n = eng.process_due();
      if (n == 0) throw RuntimeError("event loop stalled");
      events += n;
    } else {
      if (!trajectory && eng.jobs() == 0) {
        // regeneration epoch: an arrival finds the system empty
        if (in_cycle) cycles.push_back({eng.area_jobs() - cycle_area0, t - cycle_start});
        if (static_cast<long>(cycles.size()) == cfg.warmup_periods && window_start < 0.0) {
          window_start = t;
          copies_area0 = eng.area_copies();
        }
        if (static_cast<long>(cycles.size()) >= want_cycles) {
          window_end = t;
          copies_area1 = eng.area_copies();
          break;  // enough full cycles; this arrival would start the next one
        }
        in_cycle = true;
        cycle_start = t;
        cycle_area0 = eng.area_jobs();
      }
      int c = master.categorical(type_cum);
      double b = cfg.service.sample(master);
      eng.add_job(c, b);
      next_arrival = t + master.exponential(lambda);
      events += 1;
    }
    if (trajectory) {
      res.traj_time.push_back(eng.now());
      res.traj_copies.push_back(eng.copies_per_server());
    }
  }

  res.sim_time = eng.now();
  res.completed_jobs = eng.completed();
  res.per_server_mean_copies.assign(top.num_servers(), 0.0);

  if (trajectory) {
    res.mean_jobs = res.sim_time > 0.0 ? eng.area_jobs() / res.sim_time : 0.0;
    for (int s = 0; s < top.num_servers(); ++s)
      res.per_server_mean_copies[s] =
          res.sim_time > 0.0 ? eng.area_copies()[s] / res.sim_time : 0.0;
    return res;
  }

  // drop warm-up cycles from the estimator
  std::vector<Cycle> used(cycles.begin() + std::min<std::size_t>(cfg.warmup_periods, cycles.size()),
                          cycles.end());
  res.cycles = static_cast<long>(used.size());
  if (!used.empty()) {
    ratio_estimate(used, &res.mean_jobs, &res.ci_half_width);
    if (window_end < 0.0) {  // run truncated by the guard
      window_end = eng.now();
      copies_area1 = eng.area_copies();
    }
    double span = window_end - window_start;
    if (span > 0.0)
      for (int s = 0; s < top.num_servers(); ++s)
        res.per_server_mean_copies[s] = (copies_area1[s] - copies_area0[s]) / span;
  } else {
    // no full cycle: fall back to the plain time average, flagged by diverged
    res.mean_jobs = res.sim_time > 0.0 ? eng.area_jobs() / res.sim_time : 0.0;
    res.ci_half_width = 0.0;
    for (int s = 0; s < top.num_servers(); ++s)
      res.per_server_mean_copies[s] =
          res.sim_time > 0.0 ? eng.area_copies()[s] / res.sim_time : 0.0;
  }
  return res;
}

}  // namespace

SimResult run(const SimConfig& cfg) { return run_impl(cfg, false, 0.0); }

SimResult run_trajectory(const SimConfig& cfg, double horizon) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  return run_impl(cfg, true, horizon);
}

CoupledBoundsReport run_coupled_bounds(const SimConfig& cfg, long events) {
  SimConfig base = cfg;
  base.dispatch = Dispatch::Redundancy;
  base.scheduling = Scheduling::Ps;
  base.variant = Variant::Original;
  base.validate();

  SimConfig ub_cfg = base;
  ub_cfg.variant = Variant::UpperBound;
  SimConfig lb_cfg = base;
  lb_cfg.variant = Variant::LowerBound;
  lb_cfg.lb_stage = cfg.lb_stage;
  ub_cfg.validate();
  lb_cfg.validate();

  Engine orig(base, base.seed ^ kInternalSalt);
  Engine ub(ub_cfg, base.seed ^ (kInternalSalt * 3));
  Engine lb(lb_cfg, base.seed ^ (kInternalSalt * 5));
  Rng master(base.seed);

  const Topology& top = base.topology;
  SubsystemChain chain = subsystem_chain(top);
  std::vector<bool> in_iota(top.num_types(), false);
  {
    const ChainStage& st = chain.stages[cfg.lb_stage - 1];
    for (std::size_t c : st.types) in_iota[c] = true;
  }

  std::vector<double> type_cum(top.num_types());
  double acc = 0.0;
  for (int c = 0; c < top.num_types(); ++c) {
    acc += top.types[c].prob;
    type_cum[c] = acc;
  }

  for (std::size_t c = 0; c < cfg.initial_jobs.size(); ++c)
    for (long i = 0; i < cfg.initial_jobs[c]; ++i) {
      double b = cfg.service.sample(master);
      orig.add_job(static_cast<int>(c), b);
      ub.add_job(static_cast<int>(c), b);
      lb.add_job(static_cast<int>(c), b);
    }

  double next_arrival = top.lambda > 0.0 ? master.exponential(top.lambda) : kInf;

  CoupledBoundsReport rep;
  while (rep.events < events) {
    double t = std::min({next_arrival, orig.next_internal(), ub.next_internal(),
                         lb.next_internal()});
    if (t == kInf) break;
    orig.advance_to(t);
    ub.advance_to(t);
    lb.advance_to(t);
    orig.process_due();
    ub.process_due();
    lb.process_due();
    if (t == next_arrival) {
      int c = master.categorical(type_cum);
      double b = cfg.service.sample(master);
      orig.add_job(c, b);
      ub.add_job(c, b);
      lb.add_job(c, b);
      next_arrival = t + master.exponential(top.lambda);
    }
    rep.events += 1;

    const auto& n0 = orig.jobs_per_type();
    const auto& nu = ub.jobs_per_type();
    const auto& nl = lb.jobs_per_type();
    for (int c = 0; c < top.num_types(); ++c) {
      if (n0[c] > nu[c]) {
        rep.ub_violations += 1;
        if (rep.ub_violations == 1) rep.first_violations.push_back({t, c, "ub", n0[c], nu[c]});
      }
      if (in_iota[c] && nl[c] > n0[c]) {
        rep.lb_violations += 1;
        if (rep.lb_violations == 1) rep.first_violations.push_back({t, c, "lb", n0[c], nl[c]});
      }
    }
  }
  return rep;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit fit;
  const std::size_t n = x.size();
  if (n < 3) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - my - fit.slope * (x[i] - mx);
    ss += e * e;
  }
  double var = ss / static_cast<double>(n - 2);
  double se = std::sqrt(var / sxx);
  fit.t_stat = se > 0.0 ? fit.slope / se : (fit.slope == 0.0 ? 0.0 : kInf);
  return fit;
}

std::vector<std::pair<double, double>> bucket_means(const std::vector<double>& t,
                                                    const std::vector<double>& v, std::size_t lo,
                                                    int buckets) {
  std::vector<std::pair<double, double>> out;
  if (t.size() < lo + 2) return out;
  double t0 = t[lo], t1 = t.back();
  if (!(t1 > t0)) return out;
  double width = (t1 - t0) / buckets;
  std::vector<double> area(buckets, 0.0);
  for (std::size_t i = lo; i + 1 < t.size(); ++i) {
    double a = t[i], b = t[i + 1];
    int ka = std::min(buckets - 1, static_cast<int>((a - t0) / width));
    int kb = std::min(buckets - 1, static_cast<int>((b - t0) / width));
    for (int k = ka; k <= kb; ++k) {
      double seg_lo = std::max(a, t0 + k * width);
      double seg_hi = std::min(b, t0 + (k + 1) * width);
      if (seg_hi > seg_lo) area[k] += v[i] * (seg_hi - seg_lo);
    }
  }
  for (int k = 0; k < buckets; ++k)
    out.push_back({t0 + (k + 0.5) * width, area[k] / width});
  return out;
}

std::vector<FrontierPoint> estimate_stability_frontier(const Topology& base, Dispatch dispatch,
                                                       Scheduling scheduling,
                                                       const std::vector<double>& lambda_grid,
                                                       long max_events, std::uint64_t seed) {
  std::vector<FrontierPoint> out;
  for (double lambda : lambda_grid) {
    SimConfig cfg;
    cfg.topology = base;
    cfg.topology.lambda = lambda;
    cfg.dispatch = dispatch;
    cfg.scheduling = scheduling;
    cfg.seed = seed;
    cfg.max_events = max_events;
    cfg.validate();

    Engine eng(cfg, cfg.seed ^ kInternalSalt);
    Rng master(cfg.seed);
    std::vector<double> type_cum(base.num_types());
    double acc = 0.0;
    for (int c = 0; c < base.num_types(); ++c) {
      acc += base.types[c].prob;
      type_cum[c] = acc;
    }
    double next_arrival = lambda > 0.0 ? master.exponential(lambda) : kInf;

    std::vector<double> ts, copies;
    ts.reserve(max_events + 1);
    copies.reserve(max_events + 1);
    ts.push_back(0.0);
    copies.push_back(0.0);
    long events = 0;
    while (events < max_events) {
      double t_int = eng.next_internal();
      double t = std::min(next_arrival, t_int);
      if (t == kInf) break;
      eng.advance_to(t);
      if (t_int <= next_arrival) {
        events += eng.process_due();
      } else {
        int c = master.categorical(type_cum);
        eng.add_job(c, cfg.service.sample(master));
        next_arrival = t + master.exponential(lambda);
        events += 1;
      }
      ts.push_back(eng.now());
      copies.push_back(static_cast<double>(eng.total_copies()));
    }

    FrontierPoint pt;
    pt.lambda = lambda;
    auto means = bucket_means(ts, copies, ts.size() / 2, 32);
    std::vector<double> xs, ys;
    for (const auto& [x, y] : means) {
      xs.push_back(x);
      ys.push_back(y);
    }
    SlopeFit fit = fit_slope(xs, ys);
    pt.slope = fit.slope;
    pt.t_stat = fit.t_stat;
    pt.diverged = fit.slope > 0.0 && fit.t_stat > 3.0;
    out.push_back(pt);
  }
  return out;
}

}  // namespace redlab
