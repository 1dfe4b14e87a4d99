#pragma once

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <vector>

namespace mvjoint {

/// Max-flow/min-cut in the Boykov-Kolmogorov style: two search trees grown
/// from source and sink, augmentation along bridging arcs, and orphan
/// adoption after saturation. Terminal capacities are folded per node
/// (tcap > 0: residual from source, tcap < 0: residual to sink).
class MaxFlow {
public:
    explicit MaxFlow(int node_count)
        : first_(node_count, -1),
          tcap_(node_count, 0.0),
          tree_(node_count, FREE),
          parent_(node_count, NONE),
          in_active_(node_count, 0) {}

    int node_count() const { return static_cast<int>(first_.size()); }

    void add_terminal(int node, double source_cap, double sink_cap) {
        check_node(node);
        if (source_cap < 0 || sink_cap < 0)
            throw std::invalid_argument("MaxFlow: negative terminal capacity");
        flow_ += std::min(source_cap, sink_cap);
        tcap_[node] += source_cap - sink_cap;
    }

    void add_edge(int u, int v, double cap, double rev_cap) {
        check_node(u);
        check_node(v);
        if (u == v) throw std::invalid_argument("MaxFlow: self loop");
        if (cap < 0 || rev_cap < 0)
            throw std::invalid_argument("MaxFlow: negative edge capacity");
        arcs_.push_back({v, first_[u], cap});
        first_[u] = static_cast<int>(arcs_.size()) - 1;
        arcs_.push_back({u, first_[v], rev_cap});
        first_[v] = static_cast<int>(arcs_.size()) - 1;
    }

    double solve() {
        init_trees();
        while (true) {
            int bridge = grow();
            if (bridge < 0) break;
            augment(bridge);
            adopt();
        }
        solved_ = true;
        return flow_;
    }

    /// After solve(): true iff the node can still reach the sink in the
    /// residual graph. The complement is the maximal source-side min cut,
    /// which keeps tie pixels on the source side deterministically.
    bool reaches_sink(int node) const {
        check_node(node);
        if (!solved_) throw std::logic_error("MaxFlow: solve() not called");
        if (sink_reach_.empty()) compute_sink_reach();
        return sink_reach_[node] != 0;
    }

private:
    struct Arc {
        int head;
        int next;
        double rcap;
    };

    static constexpr int FREE = 0, TREE_S = 1, TREE_T = 2;
    static constexpr int NONE = -2, TERMINAL = -1;

    std::vector<Arc> arcs_;
    std::vector<int> first_;
    std::vector<double> tcap_;
    std::vector<int> tree_;
    std::vector<int> parent_;  // arc from node toward its parent, or NONE/TERMINAL
    std::vector<char> in_active_;
    std::deque<int> active_;
    std::deque<int> orphans_;
    double flow_ = 0.0;
    bool solved_ = false;
    mutable std::vector<char> sink_reach_;

    void check_node(int node) const {
        if (node < 0 || node >= node_count())
            throw std::out_of_range("MaxFlow: node index out of range");
    }

    void set_active(int u) {
        if (!in_active_[u]) {
            in_active_[u] = 1;
            active_.push_back(u);
        }
    }

    void init_trees() {
        for (int u = 0; u < node_count(); ++u) {
            if (tcap_[u] > 0) {
                tree_[u] = TREE_S;
                parent_[u] = TERMINAL;
                set_active(u);
            } else if (tcap_[u] < 0) {
                tree_[u] = TREE_T;
                parent_[u] = TERMINAL;
                set_active(u);
            }
        }
    }

    // Returns a bridging arc (S-side tail, T-side head) or -1 when the trees
    // cannot grow any further.
    int grow() {
        while (!active_.empty()) {
            int u = active_.front();
            if (tree_[u] == FREE) {
                in_active_[u] = 0;
                active_.pop_front();
                continue;
            }
            for (int a = first_[u]; a >= 0; a = arcs_[a].next) {
                int v = arcs_[a].head;
                if (tree_[u] == TREE_S) {
                    if (arcs_[a].rcap <= 0) continue;
                    if (tree_[v] == FREE) {
                        tree_[v] = TREE_S;
                        parent_[v] = a ^ 1;  // arc v -> u
                        set_active(v);
                    } else if (tree_[v] == TREE_T) {
                        return a;
                    }
                } else {
                    if (arcs_[a ^ 1].rcap <= 0) continue;  // need residual v -> u
                    if (tree_[v] == FREE) {
                        tree_[v] = TREE_T;
                        parent_[v] = a ^ 1;
                        set_active(v);
                    } else if (tree_[v] == TREE_S) {
                        return a ^ 1;  // arc v (S) -> u (T)
                    }
                }
            }
            in_active_[u] = 0;
            active_.pop_front();
        }
        return -1;
    }

    void make_orphan(int u) {
        parent_[u] = NONE;
        orphans_.push_back(u);
    }

    void augment(int bridge) {
        double f = arcs_[bridge].rcap;
        // bottleneck over the source side
        int x = arcs_[bridge ^ 1].head;  // tail of bridge
        while (parent_[x] != TERMINAL) {
            int pa = parent_[x];
            f = std::min(f, arcs_[pa ^ 1].rcap);  // residual parent -> x
            x = arcs_[pa].head;
        }
        f = std::min(f, tcap_[x]);
        // bottleneck over the sink side
        x = arcs_[bridge].head;
        while (parent_[x] != TERMINAL) {
            int pa = parent_[x];
            f = std::min(f, arcs_[pa].rcap);  // residual x -> parent
            x = arcs_[pa].head;
        }
        f = std::min(f, -tcap_[x]);

        arcs_[bridge].rcap -= f;
        arcs_[bridge ^ 1].rcap += f;

        x = arcs_[bridge ^ 1].head;
        while (parent_[x] != TERMINAL) {
            int pa = parent_[x];
            int next = arcs_[pa].head;
            arcs_[pa ^ 1].rcap -= f;
            arcs_[pa].rcap += f;
            if (arcs_[pa ^ 1].rcap <= 0) make_orphan(x);
            x = next;
        }
        tcap_[x] -= f;
        if (tcap_[x] <= 0) make_orphan(x);

        x = arcs_[bridge].head;
        while (parent_[x] != TERMINAL) {
            int pa = parent_[x];
            int next = arcs_[pa].head;
            arcs_[pa].rcap -= f;
            arcs_[pa ^ 1].rcap += f;
            if (arcs_[pa].rcap <= 0) make_orphan(x);
            x = next;
        }
        tcap_[x] += f;
        if (tcap_[x] >= 0) make_orphan(x);

        flow_ += f;
    }

    bool rooted(int w) const {
        while (true) {
            int pa = parent_[w];
            if (pa == TERMINAL) return true;
            if (pa == NONE) return false;
            w = arcs_[pa].head;
        }
    }

    void adopt() {
        while (!orphans_.empty()) {
            int x = orphans_.front();
            orphans_.pop_front();
            int t = tree_[x];
            bool found = false;
            for (int a = first_[x]; a >= 0; a = arcs_[a].next) {
                int w = arcs_[a].head;
                if (tree_[w] != t) continue;
                double resid = (t == TREE_S) ? arcs_[a ^ 1].rcap : arcs_[a].rcap;
                if (resid <= 0) continue;
                if (!rooted(w)) continue;
                parent_[x] = a;
                found = true;
                break;
            }
            if (found) continue;
            // x leaves the tree; children become orphans, potential parents
            // are reactivated so the tree can regrow toward x.
            for (int a = first_[x]; a >= 0; a = arcs_[a].next) {
                int w = arcs_[a].head;
                if (tree_[w] != t) continue;
                double resid = (t == TREE_S) ? arcs_[a ^ 1].rcap : arcs_[a].rcap;
                if (resid > 0) set_active(w);
                int pw = parent_[w];
                if (pw >= 0 && arcs_[pw].head == x) make_orphan(w);
            }
            tree_[x] = FREE;
        }
    }

    void compute_sink_reach() const {
        sink_reach_.assign(node_count(), 0);
        std::deque<int> queue;
        for (int u = 0; u < node_count(); ++u)
            if (tcap_[u] < 0) {
                sink_reach_[u] = 1;
                queue.push_back(u);
            }
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
                int w = arcs_[a].head;
                if (!sink_reach_[w] && arcs_[a ^ 1].rcap > 0) {  // residual w -> v
                    sink_reach_[w] = 1;
                    queue.push_back(w);
                }
            }
        }
    }
};

}  // namespace mvjoint
