#include "rdalab/app.hpp"

int main(int argc, char** argv) { return rdalab::app::main(argc, argv); }
