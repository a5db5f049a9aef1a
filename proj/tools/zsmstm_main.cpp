#include "zsmstm/cli.hpp"

int main(int argc, char** argv) { return zsmstm::cli::run(argc, argv); }
