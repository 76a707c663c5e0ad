# Acceptance runs of the experiment commands
