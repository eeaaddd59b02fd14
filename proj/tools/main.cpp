#include "vrg/cli.hpp"

int main(int argc, char** argv) {
    return vrg::run_cli(argc, argv);
}
