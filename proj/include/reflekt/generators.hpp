#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "reflekt/space.hpp"

namespace reflekt {

inline constexpr std::size_t kDefaultMaxPoints = 4096;

struct GeneratorParams {
  // Points per side for the lattices, total points for path_interval.
  std::size_t resolution = 0;
  // Prefractal level for carpet_prefractal.
  int level = 2;
  std::size_t max_points = kDefaultMaxPoints;
  // Replace the generator's domain with the whole space.
  bool full_domain = false;
};

struct Instance {
  std::string name;
  SpacePtr space;
  std::shared_ptr<const Domain> domain;
};

std::vector<std::string> generator_names();

/// Point count the generator would produce, without building anything.
std::size_t generator_point_count(const std::string& name, const GeneratorParams& params);

/// Deterministic instance construction; throws UnknownGenerator or
/// ResolutionTooLarge before any distance table is allocated.
Instance generate_example(const std::string& name, const GeneratorParams& params);

}  // namespace reflekt
