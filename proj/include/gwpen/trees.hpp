#pragma once

// Finite rooted ordered trees in Ulam-Harris form, their truncations and
// generation counts, a bit-exact text format, exhaustive enumeration and the
// Galton-Watson probability of a truncated shape.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gwpen/errors.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/scalar.hpp"

namespace gwpen {

/// A node label relative to the root: the sequence of child indices (1-based)
/// below the root. The root itself is the empty label.
using Label = std::vector<std::uint32_t>;

/// Immutable finite tree. Stored as labels in preorder (lexicographic order)
/// together with each node's child count. A tree rooted at height k stands for
/// the tree rooted at the label 1...1 (k ones); the prefix is not materialised.
class UlamTree {
public:
    /// The tree reduced to its root.
    explicit UlamTree(unsigned root_height = 0) : UlamTree(root_height, std::vector<unsigned>{0}) {}

    /// Builds from the preorder sequence of child counts (canonical form).
    static UlamTree from_preorder_counts(unsigned root_height, std::vector<unsigned> counts)
    {
        return UlamTree(root_height, std::move(counts));
    }

    /// Builds from a set of labels; validates prefix closure and the absence
    /// of gaps among siblings.
    static UlamTree from_labels(unsigned root_height, std::vector<Label> labels)
    {
        std::sort(labels.begin(), labels.end());
        if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
            throw DomainError("UlamTree: duplicate label");
        if (labels.empty() || !labels.front().empty()) throw DomainError("UlamTree: root (empty label) missing");
        const auto has = [&](const Label& l) { return std::binary_search(labels.begin(), labels.end(), l); };
        std::vector<unsigned> counts(labels.size(), 0);
        for (std::size_t i = 1; i < labels.size(); ++i) {
            const Label& u = labels[i];
            if (std::find(u.begin(), u.end(), 0U) != u.end()) throw DomainError("UlamTree: labels must be positive");
            Label parent(u.begin(), u.end() - 1);
            if (!has(parent)) throw DomainError("UlamTree: node without parent");
            if (u.back() > 1) {
                Label sibling = u;
                --sibling.back();
                if (!has(sibling)) throw DomainError("UlamTree: gap among children");
            }
            const auto pidx = static_cast<std::size_t>(
                std::lower_bound(labels.begin(), labels.end(), parent) - labels.begin());
            ++counts[pidx];
        }
        return UlamTree(root_height, std::move(counts));
    }

    /// Root with the given subtrees as children (each rooted at root_height + 1).
    static UlamTree from_subtrees(unsigned root_height, const std::vector<UlamTree>& children)
    {
        std::vector<unsigned> counts{static_cast<unsigned>(children.size())};
        for (const auto& c : children) {
            if (c.root_height() != root_height + 1) throw DomainError("UlamTree: subtree at the wrong height");
            counts.insert(counts.end(), c.counts_.begin(), c.counts_.end());
        }
        return UlamTree(root_height, std::move(counts));
    }

    unsigned root_height() const noexcept { return root_height_; }
    std::size_t size() const noexcept { return counts_.size(); }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<unsigned>& preorder_counts() const noexcept { return counts_; }

    /// Child count k_u of the node at preorder index i.
    unsigned child_count(std::size_t i) const { return counts_.at(i); }

    /// Child count of a labelled node; nullopt if the label is absent.
    std::optional<unsigned> child_count(const Label& u) const
    {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), u);
        if (it == labels_.end() || *it != u) return std::nullopt;
        return counts_[static_cast<std::size_t>(it - labels_.begin())];
    }

    bool contains(const Label& u) const { return std::binary_search(labels_.begin(), labels_.end(), u); }

    /// Absolute height |u| of the node at preorder index i.
    unsigned depth(std::size_t i) const { return root_height_ + static_cast<unsigned>(labels_.at(i).size()); }

    /// H(t): the largest |u|.
    unsigned height() const noexcept { return max_depth_; }

    /// z_n(t): number of nodes at absolute height n.
    std::size_t generation_size(unsigned n) const
    {
        if (n < root_height_) return 0;
        const std::size_t rel = n - root_height_;
        return static_cast<std::size_t>(
            std::count_if(labels_.begin(), labels_.end(), [rel](const Label& l) { return l.size() == rel; }));
    }

    /// r_n(t): the nodes with |u| <= n.
    UlamTree restrict(unsigned n) const
    {
        if (n < root_height_) throw DomainError("restrict: n is below the root height");
        std::vector<unsigned> counts;
        counts.reserve(counts_.size());
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const unsigned d = depth(i);
            if (d < n) counts.push_back(counts_[i]);
            else if (d == n) counts.push_back(0);
        }
        return UlamTree(root_height_, std::move(counts));
    }

    /// The ordered subtrees rooted at the children of the root.
    std::vector<UlamTree> subtrees() const
    {
        std::vector<UlamTree> out;
        std::size_t pos = 1;
        for (unsigned c = 0; c < counts_[0]; ++c) {
            const std::size_t begin = pos;
            std::size_t open = 1;
            while (open > 0) {
                open = open - 1 + counts_[pos];
                ++pos;
            }
            out.push_back(UlamTree(root_height_ + 1,
                                   std::vector<unsigned>(counts_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                         counts_.begin() + static_cast<std::ptrdiff_t>(pos))));
        }
        return out;
    }

    /// Text form: every node is "(" children ")" with children separated by a
    /// single space; the root is outermost.
    std::string to_string() const
    {
        std::string out;
        std::size_t pos = 0;
        write(out, pos, nullptr);
        return out;
    }

    friend bool operator==(const UlamTree& a, const UlamTree& b)
    {
        return a.root_height_ == b.root_height_ && a.counts_ == b.counts_;
    }
    friend bool operator<(const UlamTree& a, const UlamTree& b)
    {
        if (a.root_height_ != b.root_height_) return a.root_height_ < b.root_height_;
        return a.counts_ < b.counts_;
    }

    std::size_t hash() const noexcept
    {
        std::size_t h = std::hash<unsigned>{}(root_height_);
        for (unsigned c : counts_) h = h * 1000003U ^ std::hash<unsigned>{}(c);
        return h;
    }

    /// Writes the subtree starting at preorder index pos; `types` adds "l:" prefixes.
    void write(std::string& out, std::size_t& pos, const std::vector<unsigned>* types) const
    {
        const std::size_t me = pos++;
        if (types) out += std::to_string((*types)[me]) + ":";
        out += '(';
        for (unsigned c = 0; c < counts_[me]; ++c) {
            if (c > 0) out += ' ';
            write(out, pos, types);
        }
        out += ')';
    }

private:
    UlamTree(unsigned root_height, std::vector<unsigned> counts) : root_height_(root_height), counts_(std::move(counts))
    {
        if (counts_.empty()) throw DomainError("UlamTree: empty child-count sequence");
        labels_.reserve(counts_.size());
        // Rebuild labels from the preorder counts with an explicit stack of
        // (label, children still to visit, next child index).
        struct Frame {
            Label label;
            unsigned remaining;
            std::uint32_t next;
        };
        std::vector<Frame> stack;
        std::size_t i = 0;
        labels_.push_back({});
        stack.push_back({{}, counts_[0], 1});
        ++i;
        while (!stack.empty()) {
            Frame& top = stack.back();
            if (top.remaining == 0) {
                stack.pop_back();
                continue;
            }
            if (i >= counts_.size()) throw DomainError("UlamTree: truncated child-count sequence");
            Label child = top.label;
            child.push_back(top.next++);
            --top.remaining;
            labels_.push_back(child);
            const unsigned k = counts_[i++];
            stack.push_back({std::move(child), k, 1});
        }
        if (i != counts_.size()) throw DomainError("UlamTree: trailing entries in child-count sequence");
        for (const auto& l : labels_) max_depth_ = std::max(max_depth_, root_height_ + static_cast<unsigned>(l.size()));
    }

    unsigned root_height_ = 0;
    std::vector<unsigned> counts_;
    std::vector<Label> labels_;
    unsigned max_depth_ = 0;
};

struct UlamTreeHash {
    std::size_t operator()(const UlamTree& t) const noexcept { return t.hash(); }
};

// ---------------------------------------------------------------------------
// TypedTree
// ---------------------------------------------------------------------------

/// A tree with an integer type per node (preorder). Every node with children
/// has child types summing to its own type.
class TypedTree {
public:
    TypedTree(UlamTree tree, std::vector<unsigned> types) : tree_(std::move(tree)), types_(std::move(types))
    {
        if (types_.size() != tree_.size()) throw DomainError("TypedTree: one type per node required");
        std::size_t pos = 0;
        check(pos);
    }

    const UlamTree& tree() const noexcept { return tree_; }
    const std::vector<unsigned>& types() const noexcept { return types_; }
    unsigned root_type() const noexcept { return types_[0]; }
    unsigned type_at(std::size_t i) const { return types_.at(i); }

    /// Sum of the types of the nodes at absolute height n.
    unsigned type_mass(unsigned n) const
    {
        unsigned total = 0;
        for (std::size_t i = 0; i < tree_.size(); ++i)
            if (tree_.depth(i) == n) total += types_[i];
        return total;
    }

    /// Number of nodes of type l at absolute height n.
    std::size_t type_count(unsigned n, unsigned l) const
    {
        std::size_t c = 0;
        for (std::size_t i = 0; i < tree_.size(); ++i)
            if (tree_.depth(i) == n && types_[i] == l) ++c;
        return c;
    }

    TypedTree restrict(unsigned n) const
    {
        const UlamTree r = tree_.restrict(n);
        std::vector<unsigned> types;
        types.reserve(r.size());
        for (std::size_t i = 0; i < tree_.size(); ++i)
            if (tree_.depth(i) <= n) types.push_back(types_[i]);
        return TypedTree(r, std::move(types));
    }

    /// Text form "l:(...)" with children separated by single spaces.
    std::string to_string() const
    {
        std::string out;
        std::size_t pos = 0;
        tree_.write(out, pos, &types_);
        return out;
    }

    friend bool operator==(const TypedTree& a, const TypedTree& b)
    {
        return a.tree_ == b.tree_ && a.types_ == b.types_;
    }

private:
    void check(std::size_t& pos) const
    {
        const std::size_t me = pos++;
        const unsigned k = tree_.child_count(me);
        unsigned sum = 0;
        for (unsigned c = 0; c < k; ++c) {
            sum += types_[pos];
            check(pos);
        }
        if (k > 0 && sum != types_[me])
            throw DomainError("TypedTree: child types sum to " + std::to_string(sum) + " under a node of type " +
                              std::to_string(types_[me]));
    }

    UlamTree tree_;
    std::vector<unsigned> types_;
};

// ---------------------------------------------------------------------------
// Text format parsing
// ---------------------------------------------------------------------------

namespace detail {

class TreeParser {
public:
    TreeParser(std::string_view text, bool typed) : text_(text), typed_(typed) {}

    void parse_node()
    {
        skip_ws();
        if (typed_) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("expected a node type");
            types_.push_back(static_cast<unsigned>(std::stoul(std::string(text_.substr(start, pos_ - start)))));
            skip_ws();
            expect(':');
            skip_ws();
        }
        expect('(');
        const std::size_t me = counts_.size();
        counts_.push_back(0);
        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) fail("unterminated node");
            if (text_[pos_] == ')') {
                ++pos_;
                break;
            }
            ++counts_[me];
            parse_node();
        }
    }

    void finish()
    {
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
    }

    std::vector<unsigned> counts_;
    std::vector<unsigned> types_;

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    void expect(char c)
    {
        if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw DomainError("tree text: " + msg + " at offset " + std::to_string(pos_));
    }

    std::string_view text_;
    bool typed_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses the "(c1 c2 ...)" format; whitespace-insensitive.
inline UlamTree parse_tree(std::string_view text, unsigned root_height = 0)
{
    detail::TreeParser p(text, false);
    p.parse_node();
    p.finish();
    return UlamTree::from_preorder_counts(root_height, std::move(p.counts_));
}

/// Parses the typed "l:(...)" format; rejects type sums that violate the
/// TypedTree invariant.
inline TypedTree parse_typed_tree(std::string_view text, unsigned root_height = 0)
{
    detail::TreeParser p(text, true);
    p.parse_node();
    p.finish();
    return TypedTree(UlamTree::from_preorder_counts(root_height, std::move(p.counts_)), std::move(p.types_));
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

struct EnumerationLimits {
    unsigned max_levels = 4;
    unsigned max_children = 4;
    std::size_t max_trees = 2'000'000;
};

/// Number of trees with at most `levels` generations below the root and at
/// most `max_children` children per node: N(0) = 1, N(h) = sum_{k<=K} N(h-1)^k.
inline double count_trees(unsigned levels, unsigned max_children)
{
    double n = 1.0;
    for (unsigned h = 0; h < levels; ++h) {
        double next = 0.0;
        for (unsigned k = 0; k <= max_children; ++k) next += std::pow(n, static_cast<double>(k));
        n = next;
    }
    return n;
}

/// Every tree rooted at `root_height`, of height <= `height`, with all child
/// counts <= `max_children`, each exactly once. Ordered by root child count,
/// then lexicographically by the tuple of subtrees.
inline std::vector<UlamTree> enumerate_trees(unsigned height, unsigned max_children, unsigned root_height = 0,
                                             const EnumerationLimits& limits = {})
{
    if (height < root_height) throw DomainError("enumerate_trees: height below root height");
    const unsigned levels = height - root_height;
    if (levels > limits.max_levels)
        throw ResourceError("enumerate_trees: height - root_height = " + std::to_string(levels) + " exceeds the cap " +
                            std::to_string(limits.max_levels));
    if (max_children > limits.max_children)
        throw ResourceError("enumerate_trees: max_children = " + std::to_string(max_children) + " exceeds the cap " +
                            std::to_string(limits.max_children));
    const double total = count_trees(levels, max_children);
    if (total > static_cast<double>(limits.max_trees))
        throw ResourceError("enumerate_trees: " + format_scalar(total) + " trees exceed the cap max_trees = " +
                            std::to_string(limits.max_trees));

    // shapes[d] = preorder count sequences of trees with <= d levels.
    std::vector<std::vector<unsigned>> level{{0}};
    for (unsigned d = 1; d <= levels; ++d) {
        std::vector<std::vector<unsigned>> next;
        for (unsigned k = 0; k <= max_children; ++k) {
            std::vector<std::size_t> idx(k, 0);
            for (;;) {
                std::vector<unsigned> seq{k};
                for (std::size_t j = 0; j < k; ++j) seq.insert(seq.end(), level[idx[j]].begin(), level[idx[j]].end());
                next.push_back(std::move(seq));
                std::size_t pos = k;
                while (pos > 0 && idx[pos - 1] + 1 == level.size()) {
                    idx[pos - 1] = 0;
                    --pos;
                }
                if (pos == 0) break;
                ++idx[pos - 1];
            }
        }
        level = std::move(next);
    }
    std::vector<UlamTree> out;
    out.reserve(level.size());
    for (auto& seq : level) out.push_back(UlamTree::from_preorder_counts(root_height, std::move(seq)));
    return out;
}

// ---------------------------------------------------------------------------
// Galton-Watson probability
// ---------------------------------------------------------------------------

/// P(r_height(tau) = t) for a GW tree started at t's root height:
/// the product of q_{k_u(t)} over nodes with |u| < height. Zero when t is
/// taller than `height` or uses a child count outside the support.
template <ProbScalar T>
T gw_probability(const OffspringDistribution<T>& q, const UlamTree& t, unsigned height)
{
    if (height < t.root_height()) throw DomainError("gw_probability: height below root height");
    if (t.height() > height) return T(0);
    T prod(1);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.depth(i) >= height) continue;
        prod = prod * q.prob(t.child_count(i));
        if (prod == T(0)) return prod;
    }
    return prod;
}

} // namespace gwpen
