#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pahmm/preprocess.hpp"
#include "pahmm/time.hpp"

namespace fixtures {

// Deterministic 7-day minute fixture (2024-01-01 .. 2024-01-07). Integer
// values only, so the aggregate output is reproducible to the byte. Each rule
// of the preprocessing pipeline has a dedicated day:
//   day 0: plain active day
//   day 1: a quarter with exactly 10 hr-missing minutes (-> masked) and one
//          with exactly 9 (-> observed, rescaled)
//   day 2: 120-minute zero-step run (-> nonwear)
//   day 3: only 4 observed hours inside 08:00-20:00 (-> day dropped)
//   day 4: exactly 6 observed hours inside the window (-> retained)
//   day 5: 30-minute zero-step run between active spans (-> stays wear)
//   day 6: plain active day
inline pahmm::MinuteSeries seven_day_minutes() {
  using pahmm::MinuteSeries;
  MinuteSeries m;
  const std::int64_t start = pahmm::days_from_civil(2024, 1, 1) * 1440;
  auto steps_at = [](std::int64_t minute, int day, int mod) -> double {
    const bool active_hours = mod >= 7 * 60 && mod < 21 * 60;
    if (!active_hours) return 0.0;
    if (day == 2 && mod >= 10 * 60 && mod < 12 * 60) return 0.0;
    if (day == 5 && mod >= 14 * 60 && mod < 14 * 60 + 30) return 0.0;
    return static_cast<double>((minute * 7) % 23 + 1);
  };
  for (int day = 0; day < 7; ++day) {
    for (int mod = 0; mod < 1440; ++mod) {
      // Days 3 and 4 have restricted presence on the grid.
      if (day == 3 && !(mod >= 8 * 60 && mod < 12 * 60)) continue;
      if (day == 4 && !(mod >= 8 * 60 && mod < 14 * 60)) continue;
      const std::int64_t t = start + day * 1440 + mod;
      double hr = 60.0 + static_cast<double>(t % 37);
      if (day == 1 && mod >= 10 * 60 && mod < 10 * 60 + 10) hr = pahmm::kMissing;
      if (day == 1 && mod >= 11 * 60 && mod < 11 * 60 + 9) hr = pahmm::kMissing;
      m.t_min.push_back(t);
      m.hr.push_back(hr);
      m.steps.push_back(steps_at(t, day, mod));
    }
  }
  return m;
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("pahmm_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
