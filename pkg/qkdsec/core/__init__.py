# Core configuration, errors and numeric modules
