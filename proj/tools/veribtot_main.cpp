#include "veribtot/cli.hpp"

int main(int argc, char** argv) {
  return veribtot::cli_main(argc, argv);
}
