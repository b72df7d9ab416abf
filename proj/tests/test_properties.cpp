#include <doctest.h>

#include <string>

#include "property_suite.hpp"

TEST_CASE("randomized structural invariants hold across the parameter space") {
  const qcme_tests::PropertyReport report = qcme_tests::run_property_suite(1000);
  CHECK(report.cases == 1000);
  for (const std::string& message : report.messages) FAIL_CHECK(message);
  CHECK(report.failures == 0);
}
