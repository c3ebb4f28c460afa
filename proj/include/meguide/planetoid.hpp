#pragma once

#include <filesystem>
#include <string>

#include "meguide/graph.hpp"

namespace meguide {

// Reads the public Planetoid layout (ind.<name>.{x,y,tx,ty,allx,ally,graph}
// pickles plus ind.<name>.test.index) and applies the usual preprocessing:
// test rows are put back at their index positions, Citeseer's missing test
// ids are padded as unlabeled isolated nodes, train = the first |y| nodes,
// val = the next 500 (fewer when allx is shorter), test = the listed test ids. Features are kept raw.
// An empty name is inferred from the single ind.*.x file in the directory.
DatasetBundle convert_planetoid(const std::filesystem::path& raw_dir, std::string name = "");

}  // namespace meguide
