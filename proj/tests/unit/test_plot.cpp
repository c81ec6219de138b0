#include <string>
#include <vector>

#include <doctest.h>

#include "wirefit/errors.hpp"
#include "wirefit/plot.hpp"

using namespace wirefit;

namespace {

int count_substr(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

Series ramp(const std::string& label, double slope) {
  Series s;
  s.label = label;
  for (int i = 0; i <= 10; ++i) {
    s.x.push_back(0.1 * i);
    s.y.push_back(slope * 0.1 * i);
  }
  return s;
}

}  // namespace

TEST_SUITE("plot") {

TEST_CASE("one series renders exactly one polyline") {
  const std::string svg = render_line_chart("recall", "threshold", "recall", {ramp("fit", 1.0)});
  CHECK(count_substr(svg, "<polyline") == 1);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("fit") != std::string::npos);
  CHECK(svg.find("threshold") != std::string::npos);
}

TEST_CASE("each series adds a polyline and a legend entry") {
  const std::string svg = render_line_chart("recall", "threshold", "recall",
                                            {ramp("fit", 1.0), ramp("net", 0.5)});
  CHECK(count_substr(svg, "<polyline") == 2);
  CHECK(svg.find("fit") != std::string::npos);
  CHECK(svg.find("net") != std::string::npos);
}

TEST_CASE("identical inputs produce identical bytes") {
  const std::vector<Series> series{ramp("fit", 1.0), ramp("net", 0.7)};
  const std::string a = render_line_chart("t", "x", "y", series);
  const std::string b = render_line_chart("t", "x", "y", series);
  CHECK(a == b);
}

TEST_CASE("different data produces different bytes") {
  const std::string a = render_line_chart("t", "x", "y", {ramp("fit", 1.0)});
  const std::string b = render_line_chart("t", "x", "y", {ramp("fit", 1.1)});
  CHECK(a != b);
}

TEST_CASE("an empty series is rejected") {
  Series empty;
  empty.label = "none";
  CHECK_THROWS_AS(render_line_chart("t", "x", "y", {empty}), DegenerateInputError);
  CHECK_THROWS_AS(render_line_chart("t", "x", "y", {}), DegenerateInputError);
}

TEST_CASE("ragged x/y lengths are rejected") {
  Series bad = ramp("bad", 1.0);
  bad.y.pop_back();
  CHECK_THROWS_AS(render_line_chart("t", "x", "y", {bad}), DegenerateInputError);
}

TEST_CASE("markup characters in labels are escaped") {
  const std::string svg =
      render_line_chart("a < b & c", "x", "y", {ramp("s<1>", 1.0)});
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("s&lt;1&gt;") != std::string::npos);
  CHECK(svg.find("a < b") == std::string::npos);
}

TEST_CASE("a constant series still renders in-viewport points") {
  Series flat;
  flat.label = "flat";
  flat.x = {0.0, 1.0, 2.0};
  flat.y = {0.5, 0.5, 0.5};
  const std::string svg = render_line_chart("t", "x", "y", {flat});
  CHECK(count_substr(svg, "<polyline") == 1);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);
}

}  // TEST_SUITE
