# bundled seed scenarios (package data)
