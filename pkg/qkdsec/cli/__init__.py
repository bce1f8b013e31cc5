# Command-line frontend
