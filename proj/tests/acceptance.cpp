// One line per acceptance criterion; exit status 1 if any criterion fails.
// Usage: acceptance [--fast] [criterion ids...]
#include <cstdio>
#include <cstdlib>
#include <string>

#include "capmass/verify.hpp"

int main(int argc, char** argv) {
  capmass::VerifyOptions opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fast")
      opt.fast = true;
    else
      opt.only.push_back(std::atoi(a.c_str()));
  }
  int failed = 0, passed = 0, skipped = 0;
  capmass::run_acceptance(opt, [&](const capmass::CriterionResult& r) {
    std::printf("%s\n", capmass::format_criterion(r).c_str());
    std::fflush(stdout);
    if (r.skipped)
      ++skipped;
    else if (r.pass)
      ++passed;
    else
      ++failed;
  });
  std::printf("acceptance: %d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return failed == 0 ? 0 : 1;
}
