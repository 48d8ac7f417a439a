# Tasks package 