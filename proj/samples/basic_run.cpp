// Runs the adaptive learner and the two fixed baselines on one scenario
// and prints a short comparison.
//
//   basic_run [scenario.json]

#include <cstdio>
#include <string>

#include "ans/ans.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(ANS_DATA_DIR) + "/scenarios/step_changes.json";
  auto sc = ans::load_scenario(path);
  const auto prep = ans::prepare(sc);

  for (auto policy : {ans::Policy::ans, ans::Policy::linucb, ans::Policy::mo, ans::Policy::eo}) {
    sc.policy = policy;
    const auto tr = ans::run(sc, sc.seed, prep);
    const auto m = ans::summarize(tr);
    std::printf("%-8s avg delay %8.2f ms  regret %10.1f ms  on-device frames %d\n",
                ans::to_string(policy).c_str(), m.delay.overall, m.total_regret, m.on_device_frames);
    for (const auto& a : m.adaptation) {
      if (a.frames) {
        std::printf("         change at %d: adapted after %d frames\n", a.change_frame, *a.frames);
      } else {
        std::printf("         change at %d: did not adapt\n", a.change_frame);
      }
    }
  }
  return 0;
}
