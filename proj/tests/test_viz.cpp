#include <gtest/gtest.h>

#include <regex>

#include "shapdec/shapdec.hpp"

using namespace shapdec;
using namespace shapdec::viz;

namespace {

double attr(const std::string& tag, const std::string& name) {
  std::smatch m;
  const std::regex re(" " + name + "=\"([^\"]*)\"");
  if (!std::regex_search(tag, m, re)) throw std::runtime_error("no attribute " + name);
  return std::stod(m[1]);
}

std::vector<std::string> tags(const std::string& svg, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t at = svg.find(prefix); at != std::string::npos; at = svg.find(prefix, at + 1))
    out.push_back(svg.substr(at, svg.find('>', at) - at));
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

Decomposition toy_exact() {
  return exact_decomposition(experiments::toy_model(), experiments::toy_joint(), Vector::Ones(2), {"sex", "race"});
}

ForcePlotSpec mixed_spec() {
  ForcePlotSpec s;
  s.base = 1.5;
  s.features = {{"a", "1", 0.8, -0.2}, {"b", "2", -1.1, 0.3}, {"c", "3", 0.1, 0.4}, {"d", "", -0.05, -0.05}};
  return s;
}

}  // namespace

TEST(ForcePlot, ToySecondFeatureEntirelyHatched) {
  const auto svg = render_force_plot(force_spec(toy_exact(), Vector::Ones(2)));
  const auto race = tags(svg, "<rect class=\"segment\" data-feature=\"race\"");
  ASSERT_EQ(race.size(), 1u);
  EXPECT_NE(race[0].find("data-part=\"dep\""), std::string::npos);
  EXPECT_NE(race[0].find("url(#hatch-pos)"), std::string::npos);
  const auto sex = tags(svg, "<rect class=\"segment\" data-feature=\"sex\"");
  ASSERT_EQ(sex.size(), 1u);
  EXPECT_NE(sex[0].find("data-part=\"int\""), std::string::npos);
  EXPECT_NE(svg.find(">race = 1<"), std::string::npos);
}

TEST(ForcePlot, NoDependenceMeansNoHatching) {
  const auto spec = force_spec(toy_exact(), Vector::Ones(2), true);
  const auto svg = render_force_plot(spec);
  EXPECT_EQ(svg.find("hatch"), std::string::npos);
  EXPECT_EQ(svg.find("data-part=\"dep\""), std::string::npos);
  EXPECT_EQ(count(svg, "class=\"segment\""), 2u);
}

TEST(ForcePlot, TipLandsAtBasePlusSum) {
  const auto spec = mixed_spec();
  const auto svg = render_force_plot(spec);
  double total = 0.0;
  for (const auto& f : spec.features) total += f.phi();
  const auto base = tags(svg, "<line id=\"base\"");
  const auto tip = tags(svg, "<g id=\"tip\"");
  ASSERT_EQ(base.size(), 1u);
  ASSERT_EQ(tip.size(), 1u);
  EXPECT_NEAR(attr(tip[0], "data-value"), spec.base + total, 1e-9);

  // Pixel scale recovered from the segments themselves.
  const auto segs = tags(svg, "<rect class=\"segment\"");
  ASSERT_EQ(segs.size(), 8u);
  double px_per_unit = 0.0, signed_px = 0.0;
  for (const auto& s : segs) {
    const double extent = attr(s, "data-end") - attr(s, "data-start");
    px_per_unit = attr(s, "width") / std::fabs(extent);
    signed_px += extent > 0 ? attr(s, "width") : -attr(s, "width");
  }
  const double tip_px = attr(base[0], "data-x") + total * px_per_unit;
  EXPECT_NEAR(attr(tip[0], "data-x"), tip_px, 0.5);
  EXPECT_NEAR(attr(base[0], "data-x") + signed_px, attr(tip[0], "data-x"), 0.5);
}

TEST(ForcePlot, SegmentsShareOneScale) {
  const auto svg = render_force_plot(mixed_spec());
  std::vector<double> ratios;
  for (const auto& s : tags(svg, "<rect class=\"segment\""))
    ratios.push_back(attr(s, "width") / std::fabs(attr(s, "data-end") - attr(s, "data-start")));
  for (double r : ratios) EXPECT_NEAR(r, ratios.front(), 0.01 * ratios.front() + 0.02);
}

TEST(ForcePlot, StackingOrder) {
  const auto order = force_order(mixed_spec().features);
  // phi: a 0.6, b −0.8, c 0.5, d −0.1.
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 2, 1, 3}));
}

TEST(ForcePlot, ProbabilityAxisAndDeterminism) {
  auto spec = mixed_spec();
  spec.secondary = probability_axis();
  const auto a = render_force_plot(spec);
  EXPECT_NE(a.find("id=\"secondary-axis\""), std::string::npos);
  EXPECT_NE(a.find(">probability<"), std::string::npos);
  EXPECT_EQ(a, render_force_plot(spec));
}

TEST(ForcePlot, RenderErrors) {
  EXPECT_THROW(render_force_plot(ForcePlotSpec{}), RenderError);
  auto spec = mixed_spec();
  spec.features[1].phi_dep = std::nan("");
  EXPECT_THROW(render_force_plot(spec), RenderError);
  spec = mixed_spec();
  spec.base = std::numeric_limits<double>::infinity();
  EXPECT_THROW(render_force_plot(spec), RenderError);
}

TEST(LineChart, ConstantSeriesIsHorizontal) {
  LineChartSpec spec;
  spec.x = {0, 1, 2, 3};
  spec.series = {{"flat", {2, 2, 2, 2}, {}, {}}};
  const auto svg = render_line_chart(spec);
  const auto lines = tags(svg, "<polyline class=\"series\"");
  ASSERT_EQ(lines.size(), 1u);
  std::smatch m;
  const std::string line = lines[0];
  ASSERT_TRUE(std::regex_search(line, m, std::regex("points=\"([^\"]*)\"")));
  std::set<std::string> ys;
  const std::string pts = m[1];
  const std::regex pt("[-0-9.]+,([-0-9.]+)");
  for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pt); it != std::sregex_iterator(); ++it)
    ys.insert((*it)[1]);
  EXPECT_EQ(ys.size(), 1u);
}

TEST(LineChart, LegendAndDashes) {
  LineChartSpec spec;
  spec.x = {0, 1, 2};
  spec.series = {{"first", {0, 1, 2}, {}, {}}, {"second", {2, 1, 0}, {}, {}}};
  const auto svg = render_line_chart(spec);
  EXPECT_EQ(count(svg, "class=\"legend-entry\""), 2u);
  EXPECT_NE(svg.find(">first<"), std::string::npos);
  EXPECT_NE(svg.find(">second<"), std::string::npos);
  const auto lines = tags(svg, "<polyline class=\"series\"");
  ASSERT_EQ(lines.size(), 2u);
  const bool d0 = lines[0].find("stroke-dasharray") != std::string::npos;
  const bool d1 = lines[1].find("stroke-dasharray") != std::string::npos;
  EXPECT_NE(d0, d1);
  EXPECT_STRNE(kDashes[0], kDashes[1]);
}

TEST(LineChart, BandDrawnBehindMean) {
  LineChartSpec spec;
  spec.x = {0, 1, 2};
  spec.series = {{"m", {1, 2, 1}, {0.5, 0.5, 0.5}, {{1, 3, 2}, {0, 1, 1}}}};
  const auto svg = render_line_chart(spec);
  const auto band = svg.find("<polygon class=\"band\"");
  const auto mean = svg.find("<polyline class=\"series\"");
  ASSERT_NE(band, std::string::npos);
  EXPECT_LT(band, mean);
  EXPECT_EQ(count(svg, "class=\"overlay\""), 2u);
  EXPECT_NE(svg.find("stroke-opacity=\"0.2\""), std::string::npos);
  EXPECT_EQ(svg, render_line_chart(spec));
}

TEST(LineChart, RenderErrors) {
  LineChartSpec spec;
  EXPECT_THROW(render_line_chart(spec), RenderError);
  spec.x = {0, 1};
  spec.series = {{"m", {1, std::nan("")}, {}, {}}};
  EXPECT_THROW(render_line_chart(spec), RenderError);
  spec.series = {{"m", {1, 2, 3}, {}, {}}};
  EXPECT_THROW(render_line_chart(spec), RenderError);
}
