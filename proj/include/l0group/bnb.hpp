#pragma once
#include <l0group/heuristics.hpp>
#include <l0group/model.hpp>
#include <l0group/relax.hpp>

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace l0group {

struct NodeState
{
    NodeConstraints constraints;
    double lower_bound = -kInfinity;
    int depth = 0;
    std::vector<int> warm_active_set;
    std::shared_ptr<const Vector> warm_theta; ///< parent's relaxed solution, shared by siblings
};

enum class BnbStatus { optimal, gap_reached, node_limit, time_limit };

std::string to_string(BnbStatus status);

struct BnbOptions
{
    double gap_tol = 0.01;
    long node_limit = 1000000;
    double time_limit = kInfinity; ///< seconds
    std::size_t memory_threshold = 1000000; ///< open nodes before switching to depth-first
    RelaxOptions relax;
    /// Progress line every this many nodes (0 disables).
    long log_interval = 0;
    std::function<void(const std::string&)> log;
    /// Receives the index of every node as it is popped (for traces).
    std::function<void(long, const NodeState&)> visit;
    SwapConfig swap;
    BcdConfig bcd;
};

struct BnbResult
{
    Solution incumbent;
    double upper_bound = kInfinity;
    double lower_bound = -kInfinity;
    double gap = kInfinity;
    long nodes_processed = 0;
    BnbStatus status = BnbStatus::node_limit;
    double root_lower_bound = -kInfinity;
    double wall_seconds = 0.0;

    /// JSON object with objective, gap, lb, ub, nodes, status, support, theta.
    std::string to_json() const;
};

/// (UB - LB)/|UB|, zero when UB = 0.
double relative_gap(double upper, double lower);

/**
 * Open-node container: breadth-first (FIFO) while the number of open nodes is
 * at most `threshold`, depth-first (LIFO) above it.
 */
template <class T>
class SearchQueue
{
public:
    explicit SearchQueue(std::size_t threshold) : threshold_(threshold) {}

    void push(T item) { items_.push_back(std::move(item)); }
    bool empty() const noexcept { return items_.empty(); }
    std::size_t size() const noexcept { return items_.size(); }
    bool depth_first() const noexcept { return items_.size() > threshold_; }

    T pop()
    {
        if (depth_first()) {
            T out = std::move(items_.back());
            items_.pop_back();
            return out;
        }
        T out = std::move(items_.front());
        items_.pop_front();
        return out;
    }

private:
    std::deque<T> items_;
    std::size_t threshold_;
};

/// Children (zero, one) of a node on the fractional group whose z is closest to 0.5.
std::pair<NodeState, NodeState> branch(const RelaxSolution& relax, const NodeState& node);

/// Restricted refit on the support of relax.theta plus lambda0 |S|; returns it if it beats `incumbent`.
std::optional<Solution> node_upper_bound(const RelaxSolution& relax, const Problem& problem, const Penalty& penalty,
                                         double incumbent = kInfinity);

/// Refit restricted to `support` with ||theta_g|| <= big_m (lambda1, lambda2 kept).
Solution restricted_refit(const std::vector<int>& support, const Problem& problem, const Penalty& penalty,
                          const Vector* warm = nullptr, double tol = 1e-12);

/// 1.5 max_g ||theta_g|| of the ridge/l2,1 refit on the warm start's support.
double estimate_big_m(const Problem& problem, const Penalty& penalty, const Solution& warm);

BnbResult solve_exact(const Problem& problem, const Penalty& penalty, const std::optional<Solution>& warm_start = {},
                      const BnbOptions& opts = {});

} // namespace l0group
