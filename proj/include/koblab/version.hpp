#ifndef KOBLAB_VERSION_HPP
#define KOBLAB_VERSION_HPP

#define KOBLAB_VERSION "0.1.0"

#endif
