#pragma once

#include <any>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wheelcomm/random.hpp"

namespace wheelcomm {

// Simulation of a dual-core, tick-driven, fixed-priority preemptive RTOS
// scheduler with round-robin time slicing among equal priorities.
//
// One call to advance_tick() executes one 1 ms tick:
//   1. blocked tasks whose timeout expired become Ready;
//   2. periodic releases due at this tick are queued as jobs;
//   3. each core selects its highest-priority Ready task (ties: round-robin,
//      one tick per slice, in spawn order);
//   4. the selected handlers execute, core 0 first.
// Anything a handler wakes (queue send, event set) becomes eligible at the
// next tick. Priorities are scoped per core.

enum class TaskStatus { Running, Ready, Blocked, Suspended };

enum class PriorityOrder {
    LowerNumberIsHigher,  // 1 is the most urgent
    HigherNumberIsHigher, // FreeRTOS numbering
};

inline constexpr PriorityOrder kDefaultPriorityOrder = PriorityOrder::LowerNumberIsHigher;
inline constexpr int kCoreCount = 2;

class SchedulerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TaskContext;
using TaskHandler = std::function<void(TaskContext&)>;

struct TaskSpec {
    std::string name;
    int core = 0;
    int priority = 1;
    Tick period = 1;
    Tick phase = 0;
    // Ticks of CPU each activation consumes; the handler runs on the first.
    int cost_ticks = 1;
    // Each release is displaced by a uniform integer in [-jitter, +jitter].
    Tick jitter = 0;
    TaskHandler handler;
};

struct TaskHandle {
    std::size_t index = 0;
    friend bool operator==(TaskHandle, TaskHandle) = default;
};
struct QueueHandle {
    std::size_t index = 0;
};
struct EventGroupHandle {
    std::size_t index = 0;
};

enum class OverflowPolicy { RejectNew, DropOldest };
enum class SendResult { Ok, Overflow };

enum class WakeReason { Activation, QueueItem, QueueTimeout, EventBits, EventTimeout };

struct QueueStats {
    std::uint64_t items_in = 0;   // every send attempt
    std::uint64_t items_out = 0;  // received or handed to a waiter
    std::uint64_t overflow = 0;   // rejected or evicted
    std::size_t pending = 0;
};

struct TraceEntry {
    Tick tick = 0;
    int core = 0;
    int task = -1;  // spawn index, -1 when the core idles
    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct SchedulerConfig {
    PriorityOrder priority_order = kDefaultPriorityOrder;
    std::uint64_t jitter_seed = 0;
    bool record_trace = true;
};

class Scheduler;

/// Handed to a task handler for the duration of one execution slice.
class TaskContext {
public:
    Tick now() const noexcept { return now_; }
    /// Release tick of the job being served (for wake-ups: the tick of the wake).
    Tick activation_tick() const noexcept { return activation_; }
    /// 1-based count of releases served so far, including this one.
    std::uint64_t activation_count() const noexcept;
    WakeReason reason() const noexcept { return reason_; }
    /// Item handed over by a queue wake-up (WakeReason::QueueItem).
    const std::any& item() const noexcept { return item_; }
    /// Event bits observed by an event wake-up (WakeReason::EventBits).
    std::uint32_t observed_bits() const noexcept { return bits_; }
    TaskHandle self() const noexcept { return self_; }
    Scheduler& scheduler() noexcept { return sched_; }

    /// Returns the head item if present. Otherwise, with timeout > 0, the task
    /// blocks once this slice ends and the handler is re-invoked with
    /// QueueItem or QueueTimeout (after `timeout` ticks).
    std::optional<std::any> queue_receive(QueueHandle q, Tick timeout);

    /// Returns the group's bits if any bit of `mask` is set. Otherwise blocks as
    /// queue_receive does and resumes with EventBits or EventTimeout.
    std::optional<std::uint32_t> event_wait(EventGroupHandle g, std::uint32_t mask, Tick timeout,
                                            bool clear_on_exit = false);

    SendResult queue_send(QueueHandle q, std::any item);
    void event_set(EventGroupHandle g, std::uint32_t bits);

private:
    friend class Scheduler;
    TaskContext(Scheduler& s, TaskHandle self, Tick now, Tick activation, WakeReason reason)
        : sched_(s), self_(self), now_(now), activation_(activation), reason_(reason) {}

    Scheduler& sched_;
    TaskHandle self_;
    Tick now_;
    Tick activation_;
    WakeReason reason_;
    std::any item_;
    std::uint32_t bits_ = 0;
};

class Scheduler {
public:
    explicit Scheduler(SchedulerConfig cfg = {});

    /// Registers a task. Throws SchedulerError for a duplicate name, a core
    /// outside {0,1}, priority < 1, period < 1, cost < 1 or 2*jitter >= period.
    TaskHandle spawn(TaskSpec spec);

    QueueHandle create_queue(std::size_t capacity, OverflowPolicy policy = OverflowPolicy::RejectNew);
    EventGroupHandle create_event_group();

    /// Executes tick now() and returns its trace entries (one per core).
    std::vector<TraceEntry> advance_tick();
    void run_until(Tick end_exclusive);

    Tick now() const noexcept { return now_; }

    SendResult queue_send(QueueHandle q, std::any item);
    std::optional<std::any> queue_try_receive(QueueHandle q);
    QueueStats queue_stats(QueueHandle q) const;

    std::uint32_t event_set(EventGroupHandle g, std::uint32_t bits);
    void event_clear(EventGroupHandle g, std::uint32_t bits);
    std::uint32_t event_bits(EventGroupHandle g) const;

    void suspend(TaskHandle t);
    void resume(TaskHandle t);

    TaskStatus status(TaskHandle t) const;
    std::optional<TaskHandle> find(const std::string& name) const;
    const TaskSpec& spec(TaskHandle t) const;
    std::size_t task_count() const noexcept { return tasks_.size(); }
    std::uint64_t activations(TaskHandle t) const;

    /// Release tick of activation k (0-based) of task t.
    Tick release_tick(TaskHandle t, std::uint64_t k) const;

    const std::vector<TraceEntry>& trace() const noexcept { return trace_; }
    std::string task_name(int index) const;
    /// CSV with header "tick,core,task"; idle slots are written as IDLE.
    void write_trace_csv(std::ostream& out) const;

    /// True when `a` outranks `b` under the configured priority order.
    bool outranks(int a, int b) const noexcept;

private:
    friend class TaskContext;

    enum class BlockKind { None, Queue, Event };

    struct Wake {
        WakeReason reason{};
        std::any item;
        std::uint32_t bits = 0;
    };

    struct Task {
        TaskSpec spec;
        std::uint64_t name_key = 0;
        std::uint64_t next_release = 0;  // index of the next release to queue
        std::deque<Tick> jobs;           // release ticks awaiting service
        int remaining = 0;               // ticks left in the job in service
        std::uint64_t served = 0;
        bool suspended = false;
        bool running = false;
        BlockKind block = BlockKind::None;
        Tick deadline = 0;
        std::size_t wait_object = 0;
        std::uint32_t wait_mask = 0;
        bool wait_clear = false;
        Tick blocked_since = 0;
        std::optional<Wake> wake;
        // Set by the handler during its slice.
        std::optional<BlockKind> pending_block;
        Tick pending_timeout = 0;
        std::size_t pending_object = 0;
        std::uint32_t pending_mask = 0;
        bool pending_clear = false;
    };

    struct Queue {
        std::size_t capacity = 1;
        OverflowPolicy policy{};
        std::deque<std::any> items;
        QueueStats stats;
    };

    struct EventGroup {
        std::uint32_t bits = 0;
    };

    bool ready(const Task& t) const noexcept;
    void release_due(Task& t, std::size_t index);
    void execute(std::size_t index);
    void wake_task(Task& t, Wake w);
    std::vector<std::size_t> waiters_on(BlockKind kind, std::size_t object) const;

    SchedulerConfig cfg_;
    Tick now_ = 0;
    std::deque<Task> tasks_;  // stable addresses: handlers may spawn
    std::vector<Queue> queues_;
    std::vector<EventGroup> groups_;
    std::map<std::pair<int, int>, std::size_t> rr_cursor_;  // (core, priority) -> last slice
    std::vector<TraceEntry> trace_;
};

}  // namespace wheelcomm
