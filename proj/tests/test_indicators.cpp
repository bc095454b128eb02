#include "adaseg/indicators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace adaseg;

namespace
{
	ImageBuffer line(std::vector<double> values)
	{
		int const n = static_cast<int>(values.size());
		return ImageBuffer(n, 1, 1, std::move(values));
	}
}

TEST(Indicators, ExactIndicatorHandExamples)
{
	auto img = line({ 0, 0, 10, 10 });
	auto p = Partition::single_region(img);
	auto sides = side_stats(p, 0, AxisCut{ Axis::Vertical, 2 }, img);
	EXPECT_DOUBLE_EQ(channel_exact_indicator(sides.plus, sides.minus, 0), 50.0);

	auto img3 = line({ 0, 10, 10 });
	auto p3 = Partition::single_region(img3);
	auto s3 = side_stats(p3, 0, AxisCut{ Axis::Vertical, 1 }, img3);
	EXPECT_NEAR(channel_exact_indicator(s3.plus, s3.minus, 0), 100.0 / 3.0, 1e-12);

	auto flat = line({ 4, 4, 4 });
	auto pf = Partition::single_region(flat);
	auto sf = side_stats(pf, 0, AxisCut{ Axis::Vertical, 1 }, flat);
	EXPECT_EQ(channel_exact_indicator(sf.plus, sf.minus, 0), 0.0);
}

TEST(Indicators, FirstOrderIndicatorAndRelation)
{
	auto img = line({ 0, 0, 10, 10 });
	auto p = Partition::single_region(img);
	Cutting const cut = AxisCut{ Axis::Vertical, 2 };
	EXPECT_DOUBLE_EQ(first_order_indicator(img, p, 0, cut, 0), 20.0);
	EXPECT_DOUBLE_EQ(predicted_exact_indicator(20.0, 2, 2), 50.0);
	auto r = evaluate_cut(img, p, 0, cut, img.all_channels());
	EXPECT_DOUBLE_EQ(r.delta_j, 50.0);
	EXPECT_EQ(r.p_plus, 2u);

	auto flat = line({ 3, 3, 3, 3 });
	auto pf = Partition::single_region(flat);
	EXPECT_EQ(first_order_indicator(flat, pf, 0, cut, 0), 0.0);
}

TEST(Indicators, SignCut)
{
	auto img = line({ 0, 0, 10, 10 });
	auto p = Partition::single_region(img);
	auto s = optimal_sign_cut(img, p, 0, 0);
	EXPECT_TRUE(s.valid);
	EXPECT_DOUBLE_EQ(s.lambda_star, 20.0);
	auto mask = p.side_mask(0, s.cut, img);
	EXPECT_EQ(mask, (std::vector<bool>{ true, true, false, false }));

	auto flat = line({ 2, 2 });
	auto pf = Partition::single_region(flat);
	auto sf = optimal_sign_cut(flat, pf, 0, 0);
	EXPECT_FALSE(sf.valid);
	EXPECT_EQ(sf.lambda_star, 0.0);
}

TEST(Indicators, SignCutBeatsEveryOtherPartition)
{
	std::mt19937_64 rng(3);
	for (int trial = 0; trial < 20; ++trial)
	{
		std::vector<double> v(8);
		for (auto& x : v)
			x = static_cast<double>(rng() % 256);
		auto img = line(v);
		auto p = Partition::single_region(img);
		auto s = optimal_sign_cut(img, p, 0, 0);
		EXPECT_NEAR(s.lambda_star, adaseg::test::enumerate_max_abs_lambda(v), 1e-9);
	}
}

TEST(Indicators, BestChannelTies)
{
	std::array<double, 3> a{ 20, 5, 5 }, b{ 0, 0, 0 }, c{ 7, 7, 3 }, d{ 1, 9, 9 };
	EXPECT_EQ(best_channel(a).channel, 0);
	EXPECT_FALSE(best_channel(a).all_constant);
	EXPECT_EQ(best_channel(b).channel, 0);
	EXPECT_TRUE(best_channel(b).all_constant);
	EXPECT_EQ(best_channel(c).channel, 0);
	EXPECT_EQ(best_channel(d).channel, 1);
}

TEST(Indicators, EmptySideIsRejected)
{
	auto img = line({ 0, 10 });
	auto p = Partition::single_region(img);
	auto sides = side_stats(p, 0, AxisCut{ Axis::Vertical, 2 }, img);
	EXPECT_THROW(channel_exact_indicator(sides.plus, sides.minus, 0), std::exception);
}
