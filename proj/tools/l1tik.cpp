#include "l1tik/cli.hpp"

int main(int argc, char** argv) { return l1tik::run_cli(argc, argv); }
