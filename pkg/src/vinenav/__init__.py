"""Map-free vineyard navigation from 2D LiDAR scans and tread odometry.

In-row following with a free-space cone and side rectangles, open-loop
headland turns re-aligned on row-end poles, and end-row navigation that
counts passed rows from clustered scans. A deterministic simulator and an
evaluation harness close the loop.
"""

__version__ = "0.1.0"
