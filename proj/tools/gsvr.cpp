#include "gsvr/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  gsvr::cli::configure_allocator();
  return gsvr::cli::run(argc, argv, std::cout, std::cerr);
}
