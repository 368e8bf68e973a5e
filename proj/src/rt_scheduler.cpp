#include "wheelcomm/rt_scheduler.hpp"

#include <algorithm>
#include <ostream>

namespace wheelcomm {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

// ---- TaskContext ----------------------------------------------------------

std::uint64_t TaskContext::activation_count() const noexcept {
    return sched_.tasks_[self_.index].served;
}

std::optional<std::any> TaskContext::queue_receive(QueueHandle q, Tick timeout) {
    if (auto item = sched_.queue_try_receive(q)) return item;
    if (timeout > 0) {
        auto& t = sched_.tasks_[self_.index];
        t.pending_block = Scheduler::BlockKind::Queue;
        t.pending_timeout = timeout;
        t.pending_object = q.index;
    }
    return std::nullopt;
}

std::optional<std::uint32_t> TaskContext::event_wait(EventGroupHandle g, std::uint32_t mask, Tick timeout,
                                                     bool clear_on_exit) {
    auto& group = sched_.groups_.at(g.index);
    if ((group.bits & mask) != 0) {
        const auto observed = group.bits;
        if (clear_on_exit) group.bits &= ~mask;
        return observed;
    }
    if (timeout > 0) {
        auto& t = sched_.tasks_[self_.index];
        t.pending_block = Scheduler::BlockKind::Event;
        t.pending_timeout = timeout;
        t.pending_object = g.index;
        t.pending_mask = mask;
        t.pending_clear = clear_on_exit;
    }
    return std::nullopt;
}

SendResult TaskContext::queue_send(QueueHandle q, std::any item) { return sched_.queue_send(q, std::move(item)); }

void TaskContext::event_set(EventGroupHandle g, std::uint32_t bits) { sched_.event_set(g, bits); }

// ---- Scheduler ------------------------------------------------------------

Scheduler::Scheduler(SchedulerConfig cfg) : cfg_(cfg) {}

bool Scheduler::outranks(int a, int b) const noexcept {
    return cfg_.priority_order == PriorityOrder::LowerNumberIsHigher ? a < b : a > b;
}

TaskHandle Scheduler::spawn(TaskSpec spec) {
    if (spec.core < 0 || spec.core >= kCoreCount) throw SchedulerError("invalid core for task '" + spec.name + "'");
    if (spec.priority < 1) throw SchedulerError("invalid priority for task '" + spec.name + "'");
    if (spec.period < 1) throw SchedulerError("period must be >= 1 tick for task '" + spec.name + "'");
    if (spec.cost_ticks < 1) throw SchedulerError("cost must be >= 1 tick for task '" + spec.name + "'");
    if (spec.phase < 0) throw SchedulerError("phase must be >= 0 for task '" + spec.name + "'");
    if (spec.jitter < 0 || 2 * spec.jitter >= spec.period)
        throw SchedulerError("jitter must satisfy 0 <= 2*jitter < period for task '" + spec.name + "'");
    if (find(spec.name)) throw SchedulerError("duplicate task name '" + spec.name + "'");

    Task t;
    t.name_key = fnv1a(spec.name);
    t.spec = std::move(spec);
    tasks_.push_back(std::move(t));
    return TaskHandle{tasks_.size() - 1};
}

QueueHandle Scheduler::create_queue(std::size_t capacity, OverflowPolicy policy) {
    if (capacity == 0) throw SchedulerError("queue capacity must be >= 1");
    Queue q;
    q.capacity = capacity;
    q.policy = policy;
    queues_.push_back(std::move(q));
    return QueueHandle{queues_.size() - 1};
}

EventGroupHandle Scheduler::create_event_group() {
    groups_.emplace_back();
    return EventGroupHandle{groups_.size() - 1};
}

Tick Scheduler::release_tick(TaskHandle h, std::uint64_t k) const {
    const auto& t = tasks_.at(h.index);
    Tick tick = t.spec.phase + static_cast<Tick>(k) * t.spec.period;
    if (t.spec.jitter > 0)
        tick += uniform_int(mix64(cfg_.jitter_seed, t.name_key, k), -t.spec.jitter, t.spec.jitter);
    return std::max<Tick>(tick, 0);
}

bool Scheduler::ready(const Task& t) const noexcept {
    if (t.suspended || t.block != BlockKind::None) return false;
    return t.wake.has_value() || t.remaining > 0 || !t.jobs.empty();
}

void Scheduler::release_due(Task& t, std::size_t index) {
    while (true) {
        const Tick r = release_tick(TaskHandle{index}, t.next_release);
        if (r > now_) break;
        ++t.next_release;
        if (!t.suspended) t.jobs.push_back(r);
    }
}

std::vector<std::size_t> Scheduler::waiters_on(BlockKind kind, std::size_t object) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i)
        if (tasks_[i].block == kind && tasks_[i].wait_object == object) out.push_back(i);
    // Highest priority first, then longest waiting.
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = tasks_[a];
        const auto& tb = tasks_[b];
        if (ta.spec.priority != tb.spec.priority) return outranks(ta.spec.priority, tb.spec.priority);
        return ta.blocked_since < tb.blocked_since;
    });
    return out;
}

void Scheduler::wake_task(Task& t, Wake w) {
    t.block = BlockKind::None;
    t.wake = std::move(w);
}

std::vector<TraceEntry> Scheduler::advance_tick() {
    // 1. Timeouts.
    for (auto& t : tasks_) {
        if (t.block == BlockKind::None || t.deadline > now_) continue;
        const auto reason = t.block == BlockKind::Queue ? WakeReason::QueueTimeout : WakeReason::EventTimeout;
        wake_task(t, Wake{reason, {}, 0});
    }
    // 2. Releases.
    for (std::size_t i = 0; i < tasks_.size(); ++i) release_due(tasks_[i], i);

    // 3. Selection.
    int chosen[kCoreCount];
    for (int core = 0; core < kCoreCount; ++core) {
        chosen[core] = -1;
        std::vector<std::size_t> best;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            const auto& t = tasks_[i];
            if (t.spec.core != core || !ready(t)) continue;
            if (best.empty() || outranks(t.spec.priority, tasks_[best.front()].spec.priority)) {
                best.assign(1, i);
            } else if (t.spec.priority == tasks_[best.front()].spec.priority) {
                best.push_back(i);
            }
        }
        if (best.empty()) continue;
        const auto key = std::make_pair(core, tasks_[best.front()].spec.priority);
        std::size_t pick = best.front();
        if (auto it = rr_cursor_.find(key); it != rr_cursor_.end()) {
            auto next = std::find_if(best.begin(), best.end(), [&](std::size_t i) { return i > it->second; });
            if (next != best.end()) pick = *next;
        }
        rr_cursor_[key] = pick;
        chosen[core] = static_cast<int>(pick);
    }

    for (auto& t : tasks_) t.running = false;
    for (int core = 0; core < kCoreCount; ++core)
        if (chosen[core] >= 0) tasks_[static_cast<std::size_t>(chosen[core])].running = true;

    // 4. Execution.
    std::vector<TraceEntry> entries;
    for (int core = 0; core < kCoreCount; ++core) {
        if (chosen[core] >= 0) execute(static_cast<std::size_t>(chosen[core]));
        entries.push_back(TraceEntry{now_, core, chosen[core]});
    }
    if (cfg_.record_trace) trace_.insert(trace_.end(), entries.begin(), entries.end());
    ++now_;
    return entries;
}

void Scheduler::execute(std::size_t index) {
    auto& t = tasks_[index];
    std::optional<TaskContext> ctx;
    if (t.wake) {
        ctx.emplace(TaskContext(*this, TaskHandle{index}, now_, now_, t.wake->reason));
        ctx->item_ = std::move(t.wake->item);
        ctx->bits_ = t.wake->bits;
        t.wake.reset();
    } else if (t.remaining > 0) {
        --t.remaining;
        return;
    } else {
        const Tick release = t.jobs.front();
        t.jobs.pop_front();
        ++t.served;
        t.remaining = t.spec.cost_ticks - 1;
        ctx.emplace(TaskContext(*this, TaskHandle{index}, now_, release, WakeReason::Activation));
    }

    if (t.spec.handler) t.spec.handler(*ctx);

    // The handler may have spawned tasks; deque references stay valid.
    auto& self = tasks_[index];
    if (self.pending_block) {
        self.block = *self.pending_block;
        self.deadline = now_ + self.pending_timeout;
        self.wait_object = self.pending_object;
        self.wait_mask = self.pending_mask;
        self.wait_clear = self.pending_clear;
        self.blocked_since = now_;
        self.remaining = 0;
        self.pending_block.reset();
        self.pending_mask = 0;
        self.pending_clear = false;
    }
}

void Scheduler::run_until(Tick end_exclusive) {
    while (now_ < end_exclusive) advance_tick();
}

SendResult Scheduler::queue_send(QueueHandle h, std::any item) {
    auto& q = queues_.at(h.index);
    ++q.stats.items_in;
    const auto waiters = waiters_on(BlockKind::Queue, h.index);
    if (!waiters.empty() && q.items.empty()) {
        ++q.stats.items_out;
        wake_task(tasks_[waiters.front()], Wake{WakeReason::QueueItem, std::move(item), 0});
        return SendResult::Ok;
    }
    if (q.items.size() >= q.capacity) {
        ++q.stats.overflow;
        if (q.policy == OverflowPolicy::RejectNew) return SendResult::Overflow;
        q.items.pop_front();
        q.items.push_back(std::move(item));
        return SendResult::Overflow;
    }
    q.items.push_back(std::move(item));
    return SendResult::Ok;
}

std::optional<std::any> Scheduler::queue_try_receive(QueueHandle h) {
    auto& q = queues_.at(h.index);
    if (q.items.empty()) return std::nullopt;
    auto item = std::move(q.items.front());
    q.items.pop_front();
    ++q.stats.items_out;
    return item;
}

QueueStats Scheduler::queue_stats(QueueHandle h) const {
    auto s = queues_.at(h.index).stats;
    s.pending = queues_.at(h.index).items.size();
    return s;
}

std::uint32_t Scheduler::event_set(EventGroupHandle h, std::uint32_t bits) {
    auto& g = groups_.at(h.index);
    g.bits |= bits;
    std::uint32_t to_clear = 0;
    const auto observed = g.bits;
    for (auto i : waiters_on(BlockKind::Event, h.index)) {
        auto& t = tasks_[i];
        if ((observed & t.wait_mask) == 0) continue;
        if (t.wait_clear) to_clear |= t.wait_mask;
        wake_task(t, Wake{WakeReason::EventBits, {}, observed});
    }
    g.bits &= ~to_clear;
    return observed;
}

void Scheduler::event_clear(EventGroupHandle h, std::uint32_t bits) { groups_.at(h.index).bits &= ~bits; }

std::uint32_t Scheduler::event_bits(EventGroupHandle h) const { return groups_.at(h.index).bits; }

void Scheduler::suspend(TaskHandle h) {
    auto& t = tasks_.at(h.index);
    t.suspended = true;
    t.jobs.clear();
}

void Scheduler::resume(TaskHandle h) { tasks_.at(h.index).suspended = false; }

TaskStatus Scheduler::status(TaskHandle h) const {
    const auto& t = tasks_.at(h.index);
    if (t.suspended) return TaskStatus::Suspended;
    if (t.block != BlockKind::None) return TaskStatus::Blocked;
    if (t.running) return TaskStatus::Running;
    if (ready(t) || release_tick(h, t.next_release) <= now_) return TaskStatus::Ready;
    return TaskStatus::Blocked;
}

std::optional<TaskHandle> Scheduler::find(const std::string& name) const {
    for (std::size_t i = 0; i < tasks_.size(); ++i)
        if (tasks_[i].spec.name == name) return TaskHandle{i};
    return std::nullopt;
}

const TaskSpec& Scheduler::spec(TaskHandle h) const { return tasks_.at(h.index).spec; }

std::uint64_t Scheduler::activations(TaskHandle h) const { return tasks_.at(h.index).served; }

std::string Scheduler::task_name(int index) const {
    if (index < 0) return "IDLE";
    return tasks_.at(static_cast<std::size_t>(index)).spec.name;
}

void Scheduler::write_trace_csv(std::ostream& out) const {
    out << "tick,core,task\n";
    for (const auto& e : trace_) out << e.tick << ',' << e.core << ',' << task_name(e.task) << '\n';
}

}  // namespace wheelcomm
