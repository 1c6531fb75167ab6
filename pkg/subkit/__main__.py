from subkit.main_control import main

main()
