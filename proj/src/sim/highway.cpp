#include "setq/sim/highway.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace setq::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Speed-gain threshold scale; divided by the per-driver lcSpeedGain in
// [10, 20], so eager drivers change for ~0.5 m/s, lazy ones want ~1 m/s.
constexpr double kGainThresholdScale = 10.0;

// A follower this close and at least this much faster counts as blocked.
constexpr double kYieldGap = 10.0;
constexpr double kYieldSpeedMargin = 0.5;

double ring_forward(double from, double to, double ring) {
    double d = std::fmod(to - from, ring);
    if (d < 0) d += ring;
    return d;
}

}  // namespace

std::vector<DriverParams> sample_driver_pool(uint64_t seed, int count) {
    static constexpr double kBaseSpeed[4] = {24.0, 12.0, 18.0, 21.0};
    static constexpr double kCooperative[4] = {0.0, 1.0, 0.8, 0.4};
    nn::Rng rng(nn::mix_seed(seed, 0xd21f));
    std::vector<DriverParams> pool;
    pool.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        int type = static_cast<int>(rng.uniform_int(4));
        DriverParams d;
        d.max_speed = kBaseSpeed[type] + rng.uniform(-5.0, 5.0);
        d.lc_speed_gain = rng.uniform(10.0, 20.0);
        d.lc_cooperative = kCooperative[type];
        pool.push_back(d);
    }
    return pool;
}

DriverParams ego_driver() {
    DriverParams d;
    d.max_speed = 24.0;
    d.lc_speed_gain = 15.0;
    d.lc_cooperative = 0.0;
    return d;
}

double reward(double v_ego, double v_desired, Action chosen) {
    if (v_desired <= 0) throw std::invalid_argument("reward: v_desired must be positive");
    double r = 1.0 - std::abs(v_ego - v_desired) / v_desired;
    if (chosen != Action::Keep) r -= kLaneChangePenalty;
    return r;
}

double safe_speed(double v_leader, double net_gap, double decel, double headway) {
    double g = std::max(net_gap, 0.0);
    double bt = decel * headway;
    return -bt + std::sqrt(bt * bt + v_leader * v_leader + 2.0 * decel * g);
}

double follow_speed(const DriverParams& drv, double v, bool has_leader, double leader_gap,
                    double leader_speed, double dt) {
    double v_next = std::min(v + drv.accel * dt, drv.max_speed);
    if (has_leader) {
        double net = leader_gap - drv.min_gap;
        v_next = std::min(v_next, safe_speed(leader_speed, net, drv.decel, drv.headway));
        // hard cap: never advance past the remaining gap even if the leader
        // stops dead within the step
        v_next = std::min(v_next, std::max(net, 0.0) / dt);
    }
    return std::max(v_next, 0.0);
}

bool lane_entry_safe(double v_self, const DriverParams& drv, const LaneNeighborInfo& target) {
    if (!target.exists) return false;
    if (target.has_leader && target.leader_gap < drv.min_gap + drv.headway * v_self) return false;
    if (target.has_follower && target.follower_gap < drv.min_gap + drv.headway * target.follower_speed)
        return false;
    return true;
}

int decide_lane_change(const DriverParams& drv, double v_self, const LaneNeighborInfo& current,
                       const LaneNeighborInfo& left, const LaneNeighborInfo& right, double coop_draw) {
    auto anticipated = [&](const LaneNeighborInfo& li) {
        if (!li.has_leader) return drv.max_speed;
        double net = li.leader_gap - drv.min_gap;
        return std::min(drv.max_speed, safe_speed(li.leader_speed, net, drv.decel, drv.headway));
    };
    double v_stay = anticipated(current);
    double gain_left = (left.exists && lane_entry_safe(v_self, drv, left)) ? anticipated(left) - v_stay : -kInf;
    double gain_right = (right.exists && lane_entry_safe(v_self, drv, right)) ? anticipated(right) - v_stay : -kInf;

    int best_delta = gain_left >= gain_right ? -1 : 1;
    double best_gain = std::max(gain_left, gain_right);

    double threshold = kGainThresholdScale / drv.lc_speed_gain;
    if (best_gain > threshold) return best_delta;

    bool blocked_follower = current.has_follower && current.follower_gap <= kYieldGap &&
                            current.follower_speed > v_self + kYieldSpeedMargin;
    if (blocked_follower && coop_draw < drv.lc_cooperative && best_gain > -kInf) return best_delta;
    return 0;
}

Simulator::Simulator(const ScenarioConfig& cfg) : cfg_(cfg), rng_(nn::mix_seed(cfg.seed, 0x5eed)) {
    double footprint = DriverParams{}.length + DriverParams{}.min_gap;
    if ((cfg.n_vehicles + 1) * footprint > cfg.lanes * cfg.ring_length) {
        throw std::invalid_argument("scenario over capacity: " + std::to_string(cfg.n_vehicles) +
                                    " vehicles on " + std::to_string(cfg.lanes) + " lanes");
    }
    spawn(rng_);
    rebuild_lane_index();
    check_invariants();
}

Simulator::Simulator(const ScenarioConfig& cfg, std::vector<Vehicle> vehicles)
    : cfg_(cfg), vehicles_(std::move(vehicles)), rng_(nn::mix_seed(cfg.seed, 0x5eed)) {
    if (vehicles_.empty()) throw std::invalid_argument("explicit placement needs at least the ego");
    rebuild_lane_index();
    check_invariants();
}

void Simulator::spawn(nn::Rng& rng) {
    auto pool = sample_driver_pool(cfg_.pool_seed);
    const double spacing = DriverParams{}.length + DriverParams{}.min_gap;

    auto fits = [&](int lane, double pos) {
        for (const auto& v : vehicles_) {
            if (v.lane != lane) continue;
            double fwd = ring_forward(pos, v.pos, cfg_.ring_length);
            if (fwd < spacing || cfg_.ring_length - fwd < spacing) return false;
        }
        return true;
    };

    vehicles_.clear();
    for (int i = 0; i <= cfg_.n_vehicles; ++i) {
        Vehicle v;
        v.id = i;
        v.drv = (i == 0) ? ego_driver() : pool[rng.uniform_int(pool.size())];
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            int lane = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg_.lanes)));
            double pos = rng.uniform() * cfg_.ring_length;
            if (fits(lane, pos)) {
                v.lane = lane;
                v.pos = pos;
                placed = true;
            }
        }
        if (!placed) {
            // deterministic fallback: midpoint of the widest free arc
            double best_room = -1.0;
            for (int lane = 0; lane < cfg_.lanes; ++lane) {
                std::vector<double> ps;
                for (const auto& u : vehicles_)
                    if (u.lane == lane) ps.push_back(u.pos);
                if (ps.empty()) {
                    if (cfg_.ring_length > best_room) {
                        best_room = cfg_.ring_length;
                        v.lane = lane;
                        v.pos = 0.0;
                    }
                    continue;
                }
                std::sort(ps.begin(), ps.end());
                for (size_t k = 0; k < ps.size(); ++k) {
                    double a = ps[k];
                    double b = ps[(k + 1) % ps.size()];
                    double room = ring_forward(a, b, cfg_.ring_length);
                    if (k + 1 == ps.size() && ps.size() == 1) room = cfg_.ring_length;
                    if (room > best_room) {
                        best_room = room;
                        v.lane = lane;
                        v.pos = std::fmod(a + room / 2.0, cfg_.ring_length);
                    }
                }
            }
            if (best_room < 2.0 * spacing) {
                throw std::runtime_error("spawn failed: no free arc for vehicle " + std::to_string(i));
            }
        }
        v.speed = rng.uniform(0.3, 0.9) * v.drv.max_speed;
        vehicles_.push_back(v);
    }
}

void Simulator::rebuild_lane_index() {
    lane_index_.assign(static_cast<size_t>(cfg_.lanes), {});
    for (const auto& v : vehicles_) {
        for (int l = 0; l < cfg_.lanes; ++l) {
            if (v.occupies(l)) lane_index_[static_cast<size_t>(l)].push_back(v.id);
        }
    }
    for (auto& lane : lane_index_) {
        std::sort(lane.begin(), lane.end(),
                  [&](int a, int b) { return vehicles_[static_cast<size_t>(a)].pos < vehicles_[static_cast<size_t>(b)].pos; });
    }
}

const Vehicle* Simulator::leader_of(const Vehicle& v, int lane, double* gap_out) const {
    if (lane < 0 || lane >= cfg_.lanes) return nullptr;
    const Vehicle* best = nullptr;
    double best_fwd = kInf;
    for (int id : lane_index_[static_cast<size_t>(lane)]) {
        const Vehicle& o = vehicles_[static_cast<size_t>(id)];
        if (o.id == v.id) continue;
        double fwd = ring_forward(v.pos, o.pos, cfg_.ring_length);
        if (fwd < best_fwd) {
            best_fwd = fwd;
            best = &o;
        }
    }
    if (best && gap_out) *gap_out = best_fwd - best->drv.length;
    return best;
}

const Vehicle* Simulator::follower_of(const Vehicle& v, int lane, double* gap_out) const {
    if (lane < 0 || lane >= cfg_.lanes) return nullptr;
    const Vehicle* best = nullptr;
    double best_bwd = kInf;
    for (int id : lane_index_[static_cast<size_t>(lane)]) {
        const Vehicle& o = vehicles_[static_cast<size_t>(id)];
        if (o.id == v.id) continue;
        double bwd = ring_forward(o.pos, v.pos, cfg_.ring_length);
        if (bwd < best_bwd) {
            best_bwd = bwd;
            best = &o;
        }
    }
    if (best && gap_out) *gap_out = best_bwd - v.drv.length;
    return best;
}

LaneNeighborInfo Simulator::lane_info(const Vehicle& v, int lane) const {
    LaneNeighborInfo li;
    if (lane < 0 || lane >= cfg_.lanes) return li;
    li.exists = true;
    double gap = 0.0;
    if (const Vehicle* l = leader_of(v, lane, &gap)) {
        li.has_leader = true;
        li.leader_gap = gap;
        li.leader_speed = l->speed;
    }
    if (const Vehicle* f = follower_of(v, lane, &gap)) {
        li.has_follower = true;
        li.follower_gap = gap;
        li.follower_speed = f->speed;
    }
    return li;
}

Action Simulator::safety_check(Action a) const {
    if (a == Action::Keep) return Action::Keep;
    const Vehicle& e = vehicles_.front();
    if (e.changing()) return Action::Keep;
    int target = e.lane + (a == Action::Left ? -1 : 1);
    if (target < 0 || target >= cfg_.lanes) return Action::Keep;
    LaneNeighborInfo li = lane_info(e, target);
    return lane_entry_safe(e.speed, e.drv, li) ? a : Action::Keep;
}

void Simulator::sim_step() {
    // finalize completed rule-based maneuvers
    for (auto& v : vehicles_) {
        if (v.id != 0 && v.changing() && v.change_progress >= cfg_.change_steps) {
            v.lane = v.change_target;
            v.change_target = -1;
            v.change_progress = 0;
            v.cooldown = cfg_.change_steps;
        }
    }
    rebuild_lane_index();

    // rule-based lane-change decisions
    for (auto& v : vehicles_) {
        if (v.id == 0 || v.changing() || v.cooldown > 0) continue;
        LaneNeighborInfo cur = lane_info(v, v.lane);
        LaneNeighborInfo left = lane_info(v, v.lane - 1);
        LaneNeighborInfo right = lane_info(v, v.lane + 1);
        double draw = rng_.uniform();
        int delta = decide_lane_change(v.drv, v.speed, cur, left, right, draw);
        if (delta != 0) {
            v.change_target = v.lane + delta;
            v.change_progress = 0;
            rebuild_lane_index();
        }
    }

    // synchronous car following
    std::vector<double> new_speed(vehicles_.size());
    for (size_t i = 0; i < vehicles_.size(); ++i) {
        const Vehicle& v = vehicles_[i];
        const Vehicle* leader = nullptr;
        double gap = kInf;
        for (int l = 0; l < cfg_.lanes; ++l) {
            if (!v.occupies(l)) continue;
            double g = 0.0;
            if (const Vehicle* cand = leader_of(v, l, &g)) {
                double fwd = g + cand->drv.length;
                if (!leader || fwd < ring_forward(v.pos, leader->pos, cfg_.ring_length)) {
                    leader = cand;
                    gap = g;
                }
            }
        }
        new_speed[i] = follow_speed(v.drv, v.speed, leader != nullptr, gap,
                                    leader ? leader->speed : 0.0, cfg_.dt);
    }
    for (size_t i = 0; i < vehicles_.size(); ++i) {
        Vehicle& v = vehicles_[i];
        v.speed = new_speed[i];
        v.pos = std::fmod(v.pos + v.speed * cfg_.dt, cfg_.ring_length);
        if (v.changing()) v.change_progress += 1;
        if (v.cooldown > 0) v.cooldown -= 1;
    }
    rebuild_lane_index();
    ++step_count_;
    check_invariants();

    if (trajectory_) {
        for (const auto& v : vehicles_) {
            (*trajectory_) << step_count_ << ',' << v.id << ',' << v.pos << ','
                           << v.lane_pos(cfg_.change_steps) << ',' << v.speed << '\n';
        }
    }
}

void Simulator::check_invariants() {
    for (const auto& lane : lane_index_) {
        if (lane.size() < 2) continue;
        for (size_t k = 0; k < lane.size(); ++k) {
            const Vehicle& a = vehicles_[static_cast<size_t>(lane[k])];
            const Vehicle& b = vehicles_[static_cast<size_t>(lane[(k + 1) % lane.size()])];
            double fwd = ring_forward(a.pos, b.pos, cfg_.ring_length);
            double overlap = b.drv.length - fwd;
            if (overlap > max_overlap_seen_) max_overlap_seen_ = overlap;
        }
    }
    for (const auto& v : vehicles_) {
        if (v.speed < 0.0 || v.speed > v.drv.max_speed + 1e-9) speed_bounds_ok_ = false;
    }
}

double Simulator::step_agent_action(Action chosen) {
    Vehicle& e = vehicles_.front();
    Action effective;
    if (e.changing()) {
        effective = Action::Keep;  // still mid-change at this boundary
        if (e.change_progress >= cfg_.change_steps) {
            e.lane = e.change_target;
            e.change_target = -1;
            e.change_progress = 0;
        }
    } else {
        effective = safety_check(chosen);
    }
    if (effective != Action::Keep) {
        e.change_target = e.lane + (effective == Action::Left ? -1 : 1);
        e.change_progress = 0;
        ++lane_changes_executed_;
    }
    for (int s = 0; s < cfg_.steps_per_action; ++s) sim_step();
    ++actions_taken_;
    return reward(vehicles_.front().speed, v_desired(), chosen);
}

enc::Scene Simulator::scene() const {
    enc::Scene s;
    s.ring_length = cfg_.ring_length;
    s.lane_count = cfg_.lanes;
    for (const auto& v : vehicles_) {
        if (v.id == 0) continue;
        s.vehicles.push_back({v.id, v.pos, v.speed, v.lane_pos(cfg_.change_steps)});
    }
    return s;
}

enc::EgoState Simulator::ego_state() const {
    const Vehicle& e = vehicles_.front();
    enc::EgoState st;
    st.pos = e.pos;
    st.speed = e.speed;
    st.lane = static_cast<int>(std::lround(e.lane_pos(cfg_.change_steps)));
    return st;
}

}  // namespace setq::sim
