#include <gtest/gtest.h>

#include <set>
#include <unordered_set>

#include "gwpen/trees.hpp"

using namespace gwpen;

TEST(UlamTree, TextRoundTrip)
{
    const auto t = parse_tree("(( ) (()()) )");
    EXPECT_EQ(t.to_string(), "(() (() ()))");
    EXPECT_EQ(parse_tree(t.to_string()), t);
    EXPECT_EQ(t.size(), 5U);
    EXPECT_EQ(t.height(), 2U);
    EXPECT_EQ(t.generation_size(1), 2U);
    EXPECT_EQ(t.generation_size(2), 2U);
    EXPECT_EQ(t.generation_size(3), 0U);
    EXPECT_EQ(*t.child_count(Label{2}), 2U);
    EXPECT_FALSE(t.child_count(Label{3}).has_value());
    EXPECT_EQ(UlamTree().to_string(), "()");
    EXPECT_THROW(parse_tree("(()"), DomainError);
    EXPECT_THROW(parse_tree("()()"), DomainError);
    EXPECT_THROW(parse_tree("x"), DomainError);
}

TEST(UlamTree, FromLabelsValidates)
{
    const auto t = UlamTree::from_labels(0, {{}, {1}, {2}, {2, 1}, {2, 2}});
    EXPECT_EQ(t, parse_tree("(() (() ()))"));
    EXPECT_THROW(UlamTree::from_labels(0, {{}, {2}}), DomainError);
    EXPECT_THROW(UlamTree::from_labels(0, {{}, {1, 1}}), DomainError);
    EXPECT_THROW(UlamTree::from_labels(0, {{1}}), DomainError);
    EXPECT_THROW(UlamTree::from_labels(0, {{}, {1}, {1}}), DomainError);
}

TEST(UlamTree, RestrictAndSubtrees)
{
    const auto t = parse_tree("((()) (() ()))", 3);
    EXPECT_EQ(t.height(), 5U);
    EXPECT_EQ(t.generation_size(4), 2U);
    EXPECT_EQ(t.restrict(4), parse_tree("(() ())", 3));
    EXPECT_EQ(t.restrict(3), UlamTree(3));
    EXPECT_EQ(t.restrict(9), t);
    EXPECT_THROW(t.restrict(2), DomainError);
    const auto subs = t.subtrees();
    ASSERT_EQ(subs.size(), 2U);
    EXPECT_EQ(subs[0], parse_tree("(())", 4));
    EXPECT_EQ(subs[1], parse_tree("(() ())", 4));
    EXPECT_EQ(UlamTree::from_subtrees(3, subs), t);
}

TEST(Enumeration, CountsMatchRecursion)
{
    for (unsigned h = 0; h <= 3; ++h) {
        for (unsigned k = 1; k <= 3; ++k) {
            if (count_trees(h, k) > 200000) continue;
            const auto all = enumerate_trees(h, k);
            EXPECT_EQ(static_cast<double>(all.size()), count_trees(h, k));
            std::unordered_set<UlamTree, UlamTreeHash> uniq(all.begin(), all.end());
            EXPECT_EQ(uniq.size(), all.size());
            for (const auto& t : all) EXPECT_LE(t.height(), h);
        }
    }
    // N(1) = 3, N(2) = 1 + 3 + 9 = 13 for K = 2.
    EXPECT_EQ(enumerate_trees(2, 2).size(), 13U);
    EXPECT_EQ(enumerate_trees(2, 2).front().to_string(), "()");
}

TEST(Enumeration, Caps)
{
    EXPECT_THROW(enumerate_trees(5, 2), ResourceError);
    EXPECT_THROW(enumerate_trees(2, 5), ResourceError);
    EXPECT_THROW(enumerate_trees(4, 4), ResourceError);
    EXPECT_NO_THROW(enumerate_trees(6, 2, 3));
    EXPECT_THROW(enumerate_trees(1, 2, 3), DomainError);
}

TEST(GwProbability, SumsToOneOverEnumeration)
{
    const auto q = exact_law({"1/4", "1/4", "1/2"});
    for (unsigned h = 0; h <= 3; ++h) {
        Rational total = 0;
        for (const auto& t : enumerate_trees(h, 2)) total += gw_probability(q, t, h);
        EXPECT_EQ(total, Rational(1)) << h;
    }
    // Children beyond the support carry probability zero.
    EXPECT_EQ(gw_probability(q, parse_tree("(() () ())"), 1), Rational(0));
    EXPECT_EQ(gw_probability(q, parse_tree("((()))"), 1), Rational(0));
    EXPECT_EQ(gw_probability(q, parse_tree("(() ())"), 2), Rational(1, 2) * Rational(1, 16));
}

TEST(TypedTree, InvariantAndFormat)
{
    const auto t = parse_typed_tree("2:(1:(1:()) 1:() 0:())");
    EXPECT_EQ(t.to_string(), "2:(1:(1:()) 1:() 0:())");
    EXPECT_EQ(t.type_mass(1), 2U);
    EXPECT_EQ(t.type_count(1, 1), 2U);
    EXPECT_EQ(t.restrict(1).to_string(), "2:(1:() 1:() 0:())");
    EXPECT_THROW(parse_typed_tree("2:(1:() 0:())"), DomainError);
    EXPECT_THROW(parse_typed_tree("(())"), DomainError);
}
