#include "wino/cli.hpp"

int main(int argc, char** argv) {
    return wino::cli_main(argc, argv);
}
