#include "cli.hpp"

int main(int argc, char** argv) { return pvcm::cli::run(argc, argv); }
